# CCS codec tests package
