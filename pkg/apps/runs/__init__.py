"""
Run orchestration along the contour C1 -> C2 -> C3, persistence and export.

Usage:
    python manage.py prepare config.json --preset desk --output runs/chain8
    python manage.py evolve config.json runs/chain8/prepare_final.json
    python manage.py ed config.json
    python manage.py compare runs/chain8/prepare.jsonl runs/chain8/ed.jsonl
"""

default_app_config = 'apps.runs.apps.RunsConfig'
