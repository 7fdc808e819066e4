# Actions package
