# -*- coding: utf-8 -*-
"""
プロジェクトのメインエントリーポイント。
`python main.py <サブコマンド> ...` は `todkit <サブコマンド> ...` と同じ。
"""
import sys

from src.cli import main as cli_main


def main():
    """
    コマンドラインを実行し、終了コードを返す
    """
    exit_code = 3
    try:
        exit_code = cli_main(sys.argv[1:])

    except SystemExit as e:
        exit_code = e.code

    except KeyboardInterrupt:
        print("\n--- Interrupted ---")
        exit_code = 130

    finally:
        if exit_code not in (0, None):
            print(f"\n--- todkit finished with exit code {exit_code} ---", file=sys.stderr)
    return exit_code


if __name__ == '__main__':
    sys.exit(main())
