import sys

import click

from .extract import DATASETS, SPLITS, ExtractorConfig, extract


@click.command()
@click.option("--dataset", type=click.Choice(sorted(DATASETS)), required=True)
@click.option("--split", type=click.Choice(SPLITS), required=True)
@click.option("--out", "-o", type=click.Path(), required=True, help="FEMB file to write.")
@click.option("--batch-size", type=int, default=256)
@click.option("--device", default="cpu")
@click.option("--data-root", default="data", help="Dataset download/cache directory.")
def main(dataset, split, out, batch_size, device, data_root):
    """Extract frozen ResNet-18 embeddings into a FEMB file."""
    try:
        cfg = ExtractorConfig(
            dataset=dataset, split=split, output=out, batch_size=batch_size, device=device
        )
        femb, sidecar = extract(cfg, data_root=data_root)
    except (ValueError, RuntimeError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    click.echo(f"wrote {femb} (+ {sidecar.name})")


if __name__ == "__main__":
    main()
