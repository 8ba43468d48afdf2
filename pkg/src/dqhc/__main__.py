from dqhc.cli import main

main()
