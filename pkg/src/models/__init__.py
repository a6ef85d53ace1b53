# Package initialization for PLDA and decoupled PLDA models