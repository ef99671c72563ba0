"""kb パッケージの初期化ファイル"""
