# Tests package for relative_descent
