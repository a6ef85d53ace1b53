# Package initialization for the command-line interface