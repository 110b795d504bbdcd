"""High-precision toolkit for meromorphic Szegő functions and Verblunsky asymptotics."""
