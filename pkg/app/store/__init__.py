"""Document schemas and file I/O for systems, sets, codes and certificates."""
