from src.cli import App


def main():
    # Exit code comes from the command that ran
    raise SystemExit(App().run())


if __name__ == "__main__":
    main()
