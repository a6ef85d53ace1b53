# Package initialization for evaluation, plotting and experiment utilities