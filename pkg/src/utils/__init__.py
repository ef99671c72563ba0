"""utils パッケージの初期化ファイル"""
