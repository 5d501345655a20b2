# Test package for dogd-bench
