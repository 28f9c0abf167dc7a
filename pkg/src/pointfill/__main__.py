from pointfill.cli import main

main()
