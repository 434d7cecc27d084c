import json
import sys
from pathlib import Path

import pytest

REPO_ROOT = Path(__file__).resolve().parents[1]
DEMO_DIR = REPO_ROOT / "demo"

# ffprobe-compatible stub: emits JSON keyed off the file extension and an
# optional "_d<seconds>" stem suffix; special stems simulate tool failures.
_FAKE_PROBE_SCRIPT = r'''
import json, sys
from pathlib import Path

path = Path(sys.argv[1])
stem = path.stem
if "broken" in stem:
    sys.stderr.write("probe exploded\n")
    sys.exit(1)
if "badjson" in stem:
    sys.stdout.write("this is not json")
    sys.exit(0)

duration = 120.0
for part in stem.split("_"):
    if part.startswith("d") and part[1:].replace(".", "", 1).isdigit():
        duration = float(part[1:])

ext = path.suffix.lower()
video_names = {
    ".mp4": "mov,mp4,m4a,3gp,3g2,mj2",
    ".m4v": "mov,mp4,m4a,3gp,3g2,mj2",
    ".mov": "mov,mp4,m4a,3gp,3g2,mj2",
    ".3gp": "mov,mp4,m4a,3gp,3g2,mj2",
    ".wmv": "asf",
    ".webm": "matroska,webm",
    ".avi": "avi",
    ".mpg": "mpeg",
}
audio_names = {".mp3": "mp3", ".wav": "wav", ".m4a": "mov,mp4,m4a,3gp,3g2,mj2", ".flac": "flac"}

if ext in video_names:
    doc = {
        "format": {"format_name": video_names[ext], "duration": str(duration)},
        "streams": [
            {"codec_type": "video", "width": 640, "height": 360},
            {"codec_type": "audio"},
        ],
    }
elif ext in audio_names:
    doc = {
        "format": {"format_name": audio_names[ext], "duration": str(duration)},
        "streams": [{"codec_type": "audio"}],
    }
else:
    sys.stderr.write("unknown format\n")
    sys.exit(1)
if "silent" in stem:
    doc["streams"] = [s for s in doc["streams"] if s["codec_type"] != "audio"]
json.dump(doc, sys.stdout)
'''


@pytest.fixture(scope="session")
def fake_probe_cmd(tmp_path_factory) -> str:
    script = tmp_path_factory.mktemp("tools") / "fakeprobe.py"
    script.write_text(_FAKE_PROBE_SCRIPT, encoding="utf-8")
    return f"{sys.executable} {script} {{input}}"


@pytest.fixture(scope="session")
def demo_dir() -> Path:
    return DEMO_DIR


@pytest.fixture(scope="session")
def snow_white_outputs() -> dict:
    data = json.loads((DEMO_DIR / "outputs.json").read_text(encoding="utf-8"))
    return data["P69idA8JO98"]
