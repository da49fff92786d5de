import json

from config import GALLERY_IDS
from services import gallery
from services.codec import encode_function, encode_sequence
from utils.errors import UsageError
from utils.helpers import atomic_write


def gallery_spec(item: gallery.GalleryItem) -> dict:
    """JSON spec of a gallery item, loadable again with --spec."""
    if item.is_sequence:
        return encode_sequence(item.sequence)
    return encode_function(item.function, item.p, item.id)


def run_gallery(args):
    p = args.p if args.p is not None else 2.0
    if p < 1:
        raise UsageError(f"--p must be >= 1, got {p}")

    if not args.gallery:
        for item_id in GALLERY_IDS:
            item = gallery.build(item_id, p)
            kind = "sequence" if item.is_sequence else "function"
            print(f"{item.id}  {kind:<8}  X = {item.domain.carrier}  {item.title}")
        return 0

    item = gallery.build(args.gallery, p)
    text = json.dumps(gallery_spec(item), indent=2) + "\n"
    if args.out and args.out != "-":
        atomic_write(args.out, text)
        print(f"gallery [{item.id}] spec written -> {args.out}")
    else:
        print(text, end="")
    return 0
