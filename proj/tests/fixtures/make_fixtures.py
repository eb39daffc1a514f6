#!/usr/bin/env python3
"""Regenerates the scripted-backend fixtures in this directory.

core_script.ndjson      strict order: Create -> Eval -> Revise -> Eval -> FINISH
full_pipeline.ndjson    keyed: k=5, n=3, two rounds, usage summing to 21000/21000 tokens and 4 images
ablate_script.ndjson    keyed, every queue sticky, so any n or judge panel can replay it
logo.png                16x16 RGB logo
"""
import json
import struct
import zlib
from pathlib import Path

HERE = Path(__file__).resolve().parent

CRITERIA = ["VisualDesign", "CopywritingQuality", "BrandConsistency", "UserExperience", "TechnicalFidelity"]
EVALUATORS = [
    ("TextEvaluator", "The CTA text is short; consider making the headline bolder."),
    ("BackgroundEvaluator", "Background suits the product; keep it but raise contrast behind the text."),
    ("LayoutEvaluator", "Move the logo to the top-left corner and enlarge the CTA button."),
]
STYLES = {
    "style_1": "Bright minimalist flat design with a lemon yellow palette and bold sans-serif headline.",
    "style_2": "Retro 80s neon grid with magenta and cyan glow around the product.",
    "style_3": "Soft pastel watercolor scene with hand-lettered typography and airy spacing.",
    "style_4": "High-contrast photographic close-up with dark moody lighting and a white CTA.",
    "style_5": "Playful 3D clay render with rounded shapes and a warm orange palette.",
}


def png(width, height, pixel):
    raw = b"".join(b"\x00" + b"".join(bytes(pixel(x, y)) for x in range(width)) for y in range(height))

    def chunk(tag, data):
        return struct.pack(">I", len(data)) + tag + data + struct.pack(">I", zlib.crc32(tag + data))

    header = struct.pack(">IIBBBBB", width, height, 8, 2, 0, 0, 0)
    return b"\x89PNG\r\n\x1a\n" + chunk(b"IHDR", header) + chunk(b"IDAT", zlib.compress(raw, 9)) + chunk(b"IEND", b"")


class Script:
    def __init__(self):
        self.lines = []

    def step(self, actor, text="", kind="complete", scope=None, repeat=False, usage=None):
        payload = {"call_kind": kind, "text": text}
        if scope:
            payload["scope"] = scope
        if repeat:
            payload["repeat"] = True
        self.lines.append({"actor": actor, "payload": payload, "usage": usage})

    def write(self, path, usage_total=None):
        completes = [line for line in self.lines if line["payload"]["call_kind"] == "complete"]
        if usage_total is not None:
            share, rest = divmod(usage_total, len(completes))
            for i, line in enumerate(completes):
                tokens = share + (rest if i == 0 else 0)
                line["usage"] = {"input_tokens": tokens, "output_tokens": tokens}
        with open(path, "w", encoding="utf-8", newline="\n") as out:
            for seq, line in enumerate(self.lines):
                event = {"seq": seq, "clock": seq, "actor": line["actor"], "action": "respond",
                         "payload": line["payload"], "usage": line["usage"]}
                out.write(json.dumps(event, sort_keys=True, separators=(",", ":")) + "\n")
        return len(completes)


def create_steps(s, scope=None):
    s.step("CreateSupervisor", "Copywriter, LayoutPlanner, ImageResearcher", scope=scope)
    s.step("Copywriter", "Headline: Chill Out This Summer | Subheadline: Up to 40% off | CTA: Shop Now", scope=scope)
    s.step("LayoutPlanner", "Headline top center, product middle, CTA bottom right, logo top left.", scope=scope)
    s.step("ImageResearcher", "A cool summer scene with the product on ice, text: 'Chill Out This Summer', "
           "'Up to 40% off', CTA button 'Shop Now'.", scope=scope)
    s.step("ImageResearcher", kind="generate_image", scope=scope)


def eval_steps(s, scope=None, clean=False):
    s.step("EvalSupervisor", "TextContentEvaluator, BackgroundImageEvaluator, LayoutEvaluator", scope=scope)
    for actor, text in EVALUATORS:
        s.step(actor, "No changes needed." if clean else text, scope=scope)


def core_script():
    s = Script()
    s.step("CoreSupervisor", "ContentCreationTeam")
    create_steps(s)
    s.step("CoreSupervisor", "EvaluationTeam")
    eval_steps(s)
    s.step("CoreSupervisor", "GraphicRevisor: enlarge the CTA and move the logo")
    s.step("GraphicRevisor", "Enlarge the CTA button by 30% and move the logo to the top-left corner.")
    s.step("GraphicRevisor", kind="edit_image")
    s.step("CoreSupervisor", "EvaluationTeam")
    eval_steps(s, clean=True)
    s.step("CoreSupervisor", "FINISH")
    return s


def votes(s, scope, rejected):
    for i, criterion in enumerate(CRITERIA):
        if i < rejected:
            s.step(f"Judge:{criterion}", "REJECTED - the CTA is hard to read at small size", scope=scope)
        else:
            s.step(f"Judge:{criterion}", "RECOMMENDED - clear hierarchy and faithful logo", scope=scope)


def full_pipeline():
    s = Script()
    s.step("StyleProposer", json.dumps(STYLES, indent=1))
    s.step("StyleSelector", "style_1, style_3, style_4")
    # Initial core runs for StyleIds 0, 2 and 3.
    for sid in (0, 2, 3):
        scope = f"style:{sid}"
        s.step("CoreSupervisor", "ContentCreationTeam", scope=scope)
        create_steps(s, scope)
        s.step("CoreSupervisor", "EvaluationTeam", scope=scope)
        eval_steps(s, scope)
        s.step("CoreSupervisor", "FINISH", scope=scope)
    # Round 0: rejections 0 / 3 / 1, so style 2 goes.
    votes(s, "style:0", 0)
    votes(s, "style:2", 3)
    votes(s, "style:3", 1)
    # Refinement: style 0 revises once, style 3 finishes.
    eval_steps(s, "style:0")
    s.step("CoreSupervisor", "GraphicRevisor", scope="style:0")
    s.step("GraphicRevisor", "Raise the CTA contrast and move the logo to the top-left corner.", scope="style:0")
    s.step("GraphicRevisor", kind="edit_image", scope="style:0")
    eval_steps(s, "style:3")
    s.step("CoreSupervisor", "FINISH", scope="style:3")
    # Round 1: rejections 1 / 2, so style 3 goes.
    votes(s, "style:0", 1)
    votes(s, "style:3", 2)
    # The winner is refined once more and finishes.
    eval_steps(s, "style:0", clean=True)
    s.step("CoreSupervisor", "FINISH", scope="style:0")
    return s


def ablate_script():
    s = Script()
    s.step("StyleProposer", json.dumps(STYLES, indent=1), repeat=True)
    s.step("StyleSelector", "style_1, style_3, style_4", repeat=True)
    s.step("CoreSupervisor", "FINISH", repeat=True)
    s.step("CreateSupervisor", "Copywriter, ImageResearcher", repeat=True)
    s.step("Copywriter", "Headline: Chill Out This Summer | CTA: Shop Now", repeat=True)
    s.step("LayoutPlanner", "Headline top, CTA bottom right, logo top left.", repeat=True)
    s.step("ImageResearcher", "A cool summer scene with the product on ice and a 'Shop Now' CTA.", repeat=True)
    s.step("ImageResearcher", kind="generate_image", repeat=True)
    s.step("EvalSupervisor", "TextContentEvaluator, LayoutEvaluator", repeat=True)
    for actor, text in EVALUATORS:
        s.step(actor, text, repeat=True)
    s.step("GraphicRevisor", "Enlarge the CTA button.", repeat=True)
    s.step("GraphicRevisor", kind="edit_image", repeat=True)
    for i, criterion in enumerate(CRITERIA):
        vote = "REJECTED - weak CTA contrast" if i % 2 == 0 else "RECOMMENDED - strong composition"
        s.step(f"Judge:{criterion}", vote, repeat=True)
    metrics = {m: {"image_1_score": 3, "image_1_reason": "Decent first draft.", "image_2_score": 4,
                   "image_2_reason": "Refined draft is cleaner."}
               for m in ["TAA", "LPS", "CTAE", "CPYQ", "BIS", "AQS"]}
    s.step("SingleAgent", "A square summer banner: iced tea on ice, headline 'Chill Out', CTA 'Shop Now', logo top left.",
           repeat=True)
    s.step("SingleAgent", kind="generate_image", repeat=True)
    s.step("Scorer", "Here is my evaluation:\n" + json.dumps(metrics, indent=1), repeat=True)
    return s


def main():
    (HERE / "logo.png").write_bytes(png(16, 16, lambda x, y: (255, 200, 0) if (x // 4 + y // 4) % 2 else (20, 20, 90)))
    core_script().write(HERE / "core_script.ndjson")
    calls = full_pipeline().write(HERE / "full_pipeline.ndjson", usage_total=21000)
    ablate_script().write(HERE / "ablate_script.ndjson")
    print(f"full_pipeline: {calls} completions")


if __name__ == "__main__":
    main()
