"""model パッケージの初期化ファイル"""
