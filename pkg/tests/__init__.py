# Package initialization for test suite