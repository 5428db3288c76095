from sacq.cli import main

main()
