import json
import os
from pathlib import Path

import pytest

import mimo

TESTS = Path(os.environ.get("MIMO_TEST_DATA_DIR", Path(__file__).resolve().parents[1]))
FIXTURES = TESTS / "fixtures"


def test_appendix_costs():
    assert mimo.cost(500, 500, 1) == (148_400, "$0.1484", "$0.15")
    assert mimo.cost(21_000, 21_000, 4) == (2_873_600, "$2.8736", "$2.87")


def test_templates_render():
    assert len(mimo.list_templates()) == 14
    text = mimo.render("single_agent_ablation", {"item": "SolarKettle"})
    assert "SolarKettle" in text
    golden = (TESTS / "goldens" / "copywriter.txt").read_text()
    assert mimo.render("copywriter") == golden


def test_missing_binding_is_typed_error():
    with pytest.raises(mimo.Error) as info:
        mimo.render("single_agent_ablation")
    assert mimo.error_code(info.value) == "MissingBinding"


def test_spearman_and_aggregate():
    assert mimo.spearman([1, 2, 3, 4, 5], [1, 2, 3, 4, 5]) == 1.0
    assert mimo.spearman([1, 2, 3], [3, 2, 1]) == -1.0
    assert abs(mimo.spearman([1, 2, 3, 4], [1, 3, 2, 4]) - 0.8) < 1e-12
    table = mimo.aggregate([("m", "AQS", "r1", 3), ("m", "AQS", "r2", 5)])
    assert table["m"]["AQS"] == {"mean": "4.00", "std": "1.00", "n": 2}
    with pytest.raises(mimo.Error):
        mimo.spearman([1, 2], [1, 2, 3])


def test_metric_payload_schema():
    payload = {m: {"image_1_score": 3, "image_1_reason": "", "image_2_score": 4, "image_2_reason": "ok"}
               for m in ["TAA", "LPS", "CTAE", "CPYQ", "BIS", "AQS"]}
    parsed = mimo.parse_metric_payload("Result: " + json.dumps(payload))
    assert parsed["AQS"]["image_2_score"] == 4
    payload["AQS"]["image_1_score"] = 7
    with pytest.raises(mimo.Error) as info:
        mimo.parse_metric_payload(json.dumps(payload))
    assert mimo.error_code(info.value) == "RangeError"


def test_eliminate_ties_to_lowest_id():
    record = mimo.eliminate({4: [True, True, False, False, False], 1: [True, False, True, False, False]})
    assert record["eliminated"] == 1


def test_generate_round_trip(tmp_path):
    config = {"backend": "scripted:" + str(FIXTURES / "full_pipeline.ndjson"), "clock": "counter", "seed": 3}
    outcome = mimo.generate("Summer sale on iced tea", FIXTURES / "logo.png", config=config, out_dir=tmp_path)
    report = outcome["report"]
    assert report["status"] == "ok"
    assert len(report["rounds"]) == 2
    assert report["winner"]["style_id"] == 0
    assert mimo.cost_from_run(outcome["run_dir"])["total"]["display"] == "$2.87"
    assert mimo.check_memory_law(outcome["run_dir"]) == ""


def test_single_agent_core(tmp_path):
    config = {"backend": "scripted:" + str(FIXTURES / "ablate_script.ndjson"), "clock": "counter"}
    outcome = mimo.run_core("Summer sale", FIXTURES / "logo.png", config=config, out_dir=tmp_path, single_agent=True)
    events = [json.loads(line) for line in Path(outcome["run_dir"], "transcript.ndjson").read_text().splitlines()]
    kinds = [e["usage"]["call_kind"] for e in events if e["usage"]]
    assert sorted(kinds) == ["complete", "generate_image"]


def test_bad_config_is_config_error(tmp_path):
    with pytest.raises(mimo.Error) as info:
        mimo.generate("p", FIXTURES / "logo.png", config={"n": 9}, out_dir=tmp_path)
    assert mimo.error_code(info.value) == "ConfigError"
