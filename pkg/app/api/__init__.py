# Command package
