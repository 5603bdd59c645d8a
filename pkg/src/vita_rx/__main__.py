"""Allow running as `python -m vita_rx`."""

from vita_rx.cli import main

raise SystemExit(main())
