"""Domain layer — records, graphs, reports and ports; numpy is the only dependency."""
