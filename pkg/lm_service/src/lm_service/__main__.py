import os

import uvicorn

from .app import create_app


def main() -> None:
    port = int(os.environ.get("PORT", "8100"))
    uvicorn.run(create_app(), host="0.0.0.0", port=port)


if __name__ == "__main__":
    main()
