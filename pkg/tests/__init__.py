# Test package marker to ensure relative imports and path resolution work.