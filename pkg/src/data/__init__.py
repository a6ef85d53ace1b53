# Package initialization for data handling module