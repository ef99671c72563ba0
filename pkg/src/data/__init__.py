"""data パッケージの初期化ファイル"""
