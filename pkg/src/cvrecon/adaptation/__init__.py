"""Beta-FER tables, adaptive efficiency selection and the reconciliation pipeline."""
from .campaign import CAMPAIGN_COLUMNS, CampaignReport, estimate_block, run_campaign
from .montecarlo import CellResult, FerCell, quadrature_capacity, run_cells
from .pipeline import BlockOutcome, alice_side, block_snr, bob_side, reconcile_block
from .table import SKIP, BetaFerTable, TableEntry, build_table, select_beta, wilson_halfwidth

__all__ = [
    "CAMPAIGN_COLUMNS", "CampaignReport", "estimate_block", "run_campaign", "CellResult",
    "FerCell", "quadrature_capacity", "run_cells", "BlockOutcome", "alice_side", "block_snr",
    "bob_side", "reconcile_block", "SKIP", "BetaFerTable", "TableEntry", "build_table",
    "select_beta", "wilson_halfwidth",
]
