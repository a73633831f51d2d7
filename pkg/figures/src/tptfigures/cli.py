"""Command line entry: render --run <dir> --kind <k> --out <file>."""

from __future__ import annotations

import sys

import click

from .render import KINDS, render


@click.command()
@click.option("--run", "runs", multiple=True, required=True,
              type=click.Path(exists=True, file_okay=False),
              help="Run directory; repeat for multi-run kinds (rate-table).")
@click.option("--kind", type=click.Choice(list(KINDS)), required=True)
@click.option("--projection", type=click.Choice(["plane", "sphere-3d", "torus-3d"]),
              default="plane", show_default=True)
@click.option("--out", required=True, type=click.Path())
def main(runs, kind, projection, out):
    """Regenerate one figure from completed run outputs."""
    try:
        render(list(runs), kind, out, projection)
        click.echo(f"wrote {out}")
    except Exception as exc:
        click.echo(f"error[render]: {exc}", err=True)
        sys.exit(1)


if __name__ == "__main__":
    main()
