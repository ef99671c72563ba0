"""agent パッケージの初期化ファイル"""
