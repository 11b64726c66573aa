from decimal import Decimal
from fractions import Fraction
from pathlib import Path

import pytest
from hypothesis import given
from hypothesis import strategies as st

from pipechain.harness.formats import (
    FORMAT_CSV,
    FORMAT_JSON_LINES,
    FORMAT_KEY_VALUE,
    FORMATS,
    ParseError,
    Reading,
    descale_text,
    normalize,
    render,
    scale_value,
)
from pipechain.harness.producers import ProducerSpec, SpecError, ValueModel, generate_records
from pipechain.harness.runner import run_scenario
from pipechain.harness.scenario import Scenario, ScenarioError, load_scenario

SCENARIO_DIR = Path(__file__).resolve().parent.parent / "scenarios"


# -- normalization -------------------------------------------------------------


def test_csv_normalization_example():
    reading = normalize("s1,temperature,25.31,C,1677651200", FORMAT_CSV)
    assert reading == Reading(
        producer_id="s1",
        parameter=0,
        value_scaled=25310,
        unit="C",
        source_timestamp=1677651200,
    )


def test_milli_unit_rounding_half_away_from_zero():
    assert scale_value("25.31") == 25310
    assert scale_value("0.0005") == 1
    assert scale_value("-0.0005") == -1
    assert scale_value("0.0004") == 0
    assert scale_value("-1.2345") == -1235
    assert scale_value("7") == 7000


def test_jsonlines_missing_value_is_parse_error():
    line = '{"producer": "p", "parameter": "temperature", "unit": "C", "timestamp": 5}'
    with pytest.raises(ParseError):
        normalize(line, FORMAT_JSON_LINES)


def test_unknown_parameter_is_parse_error():
    with pytest.raises(ParseError):
        normalize("s1,wind,3.2,m/s,5", FORMAT_CSV)


def test_bad_timestamp_is_parse_error():
    with pytest.raises(ParseError):
        normalize("s1,temperature,3.2,C,yesterday", FORMAT_CSV)


def test_cross_format_equivalence():
    reading = Reading("s1", 1, 1013250, "hPa", 1677651200)
    normalized = {fmt: normalize(render(reading, fmt), fmt) for fmt in FORMATS}
    assert len(set(normalized.values())) == 1
    assert normalized[FORMAT_CSV] == reading


@given(
    value_scaled=st.integers(min_value=-(10**9), max_value=10**9),
    parameter=st.integers(min_value=0, max_value=255),
    timestamp=st.integers(min_value=0, max_value=2**40),
    fmt=st.sampled_from(FORMATS),
)
def test_round_trip_identity_property(value_scaled, parameter, timestamp, fmt):
    reading = Reading("probe-7", parameter, value_scaled, "u", timestamp)
    assert normalize(render(reading, fmt), fmt) == reading


def test_descale_text_is_exact():
    assert descale_text(25310) == "25.310"
    assert descale_text(-1235) == "-1.235"
    assert descale_text(0) == "0.000"
    assert scale_value(descale_text(123456789)) == 123456789


# -- producers -------------------------------------------------------------------


def spec(**overrides) -> ProducerSpec:
    fields = dict(
        producer_id="p1",
        format=FORMAT_CSV,
        parameter="temperature",
        rate_hz=Fraction(10),
        value_model=ValueModel(base=Decimal("20"), amplitude=Decimal("5"), noise_seed=3),
        principal_id="sensor-p1",
        contract_id="c-p1",
        messages=25,
    )
    fields.update(overrides)
    return ProducerSpec(**fields)


def test_message_budget_arithmetic():
    records = generate_records(spec(messages=25), start_time=1000)
    assert len(records) == 25
    total = sum(
        len(generate_records(spec(producer_id=f"p{i}", messages=25), 1000))
        for i in range(4)
    )
    assert total == 100


def test_same_seed_same_stream():
    a = generate_records(spec(), start_time=1000)
    b = generate_records(spec(), start_time=1000)
    assert [r.line for r in a] == [r.line for r in b]


def test_different_noise_seed_different_stream():
    a = generate_records(spec(), start_time=1000)
    b = generate_records(
        spec(value_model=ValueModel(Decimal("20"), Decimal("5"), noise_seed=99)), 1000
    )
    assert [r.line for r in a] != [r.line for r in b]


def test_rate_limit_enforced_before_run():
    with pytest.raises(SpecError):
        spec(rate_hz=Fraction(1000)).validate()


def test_value_model_must_stay_plausible():
    with pytest.raises(SpecError):
        spec(
            parameter="humidity",
            value_model=ValueModel(Decimal("95"), Decimal("20"), 1),
        ).validate()


def test_generated_values_parse_and_stay_in_range():
    records = generate_records(spec(messages=200), start_time=0)
    for record in records:
        reading = normalize(record.line, FORMAT_CSV)
        assert -90_000 <= reading.value_scaled <= 60_000


def test_timestamps_follow_rate():
    records = generate_records(spec(rate_hz=Fraction(2), messages=6), start_time=100)
    stamps = [normalize(r.line, FORMAT_CSV).source_timestamp for r in records]
    assert stamps == [100, 100, 101, 101, 102, 102]


def test_malformed_every_produces_parse_drops():
    records = generate_records(spec(malformed_every=5, messages=10), start_time=0)
    failures = 0
    for record in records:
        try:
            normalize(record.line, FORMAT_CSV)
        except ParseError:
            failures += 1
    assert failures == 2


# -- scenario file ------------------------------------------------------------------


def test_demo_scenario_loads():
    scenario = load_scenario(SCENARIO_DIR / "demo.scenario")
    assert scenario.ledger == "mhews-blockchain"
    assert scenario.nodes == 3
    assert len(scenario.producers) == 4
    assert {p.parameter for p in scenario.producers} == {
        "temperature",
        "pressure",
        "moisture",
        "humidity",
    }
    assert len(scenario.attacks) == 4
    assert {a.kind for a in scenario.attacks} == {
        "modify_in_flight",
        "replay_request",
        "mutate_replica_storage",
        "forge_submitter",
    }


def test_request_level_attack_on_token_producer_rejected(tmp_path):
    text = """
[scenario]
name = bad
ledger = x-ledger
nodes = 3

[producer p1]
parameter = temperature
base = 20
amplitude = 1
principal = s1
principal_kind = token

[attack a1]
kind = replay_request
target = p1
after_messages = 1
"""
    path = tmp_path / "bad.scenario"
    path.write_text(text)
    with pytest.raises(ScenarioError):
        load_scenario(path)


def test_even_node_count_rejected(tmp_path):
    path = tmp_path / "bad.scenario"
    path.write_text("[scenario]\nname = x\nnodes = 2\n")
    with pytest.raises(ScenarioError):
        load_scenario(path)


# -- end-to-end runs ------------------------------------------------------------------


def small_scenario(attacks=(), malformed_every=0) -> Scenario:
    text = f"""
[scenario]
name = small
ledger = small-ledger
seed = 5
nodes = 3

[producer t1]
format = csv
parameter = temperature
rate_hz = 10
base = 20.0
amplitude = 2.0
noise_seed = 11
messages = 8
principal = sensor-t1
principal_kind = cert
contract = c-t1
malformed_every = {malformed_every}

[producer h1]
format = keyvalue
parameter = humidity
rate_hz = 10
base = 50.0
amplitude = 5.0
noise_seed = 12
messages = 8
principal = sensor-h1
principal_kind = token
contract = c-h1
"""
    for i, attack in enumerate(attacks):
        text += f"\n[attack a{i}]\n" + "\n".join(
            f"{k} = {v}" for k, v in attack.items()
        ) + "\n"
    return text


def load_inline(tmp_path, text) -> Scenario:
    path = tmp_path / "inline.scenario"
    path.write_text(text)
    return load_scenario(path)


def test_clean_run_exit_zero(tmp_path):
    scenario = load_inline(tmp_path, small_scenario())
    report, code = run_scenario(scenario, tmp_path / "work", sim=True, echo=lambda *_: None)
    assert code == 0
    assert report.attacks_injected == 0
    assert report.produced == 16
    assert report.committed == 16
    assert report.undetected == []
    assert report.conserved


def test_run_report_deterministic_for_fixed_seed(tmp_path):
    def counters(base):
        scenario = load_inline(tmp_path, small_scenario(malformed_every=3))
        report, _ = run_scenario(scenario, base, sim=True, echo=lambda *_: None)
        return report.summary_dict()

    assert counters(tmp_path / "w1") == counters(tmp_path / "w2")


def test_each_attack_kind_detected(tmp_path):
    attacks = [
        {"kind": "modify_in_flight", "target": "t1", "after_messages": 2, "seed": 1},
        {"kind": "replay_request", "target": "t1", "after_messages": 4, "seed": 2},
        {"kind": "forge_submitter", "target": "h1", "after_messages": 3, "seed": 3},
        {"kind": "mutate_replica_storage", "target": "n2", "at_height": 3, "seed": 4},
    ]
    scenario = load_inline(tmp_path, small_scenario(attacks=attacks))
    report, code = run_scenario(scenario, tmp_path / "work", sim=True, echo=lambda *_: None)
    assert report.attacks_injected == 4
    assert report.attacks_detected == 4
    assert report.undetected == []
    sites = {d["kind"]: d["site"] for d in report.detections}
    assert sites == {
        "modify_in_flight": "GatewayAuth",
        "replay_request": "GatewayAuth",
        "forge_submitter": "ContractGuard",
        "mutate_replica_storage": "ReplicaAudit",
    }
    assert code == 0
    assert report.conserved


def test_detection_complete_across_50_seeded_runs(tmp_path):
    attacks = [
        {"kind": "modify_in_flight", "target": "t1", "after_messages": 2, "seed": 1},
        {"kind": "replay_request", "target": "t1", "after_messages": 4, "seed": 2},
        {"kind": "forge_submitter", "target": "h1", "after_messages": 3, "seed": 3},
        {"kind": "mutate_replica_storage", "target": "n2", "at_height": 3, "seed": 4},
    ]
    scenario = load_inline(tmp_path, small_scenario(attacks=attacks))
    for seed in range(50):
        report, code = run_scenario(
            scenario, tmp_path / f"work-{seed}", sim=True, seed=seed,
            echo=lambda *_: None,
        )
        assert code == 0, (seed, report.infrastructure_errors, report.verification_failures)
        assert report.attacks_injected == 4, seed
        assert report.undetected == [], seed
        assert report.attacks_detected + len(report.undetected) == report.attacks_injected
        assert report.conserved, seed


def test_report_file_is_line_delimited_with_summary(tmp_path):
    import json

    scenario = load_inline(tmp_path, small_scenario())
    report_path = tmp_path / "out" / "report.jsonl"
    run_scenario(
        scenario, tmp_path / "work", sim=True, report_path=report_path,
        echo=lambda *_: None,
    )
    lines = [json.loads(line) for line in report_path.read_text().splitlines()]
    assert lines[-1]["event"] == "summary"
    kinds = {line["event"] for line in lines}
    assert {"produced", "submitted", "summary"} <= kinds


def test_unreachable_live_cluster_is_infrastructure_error(tmp_path):
    text = small_scenario() + """
[live]
gateway_url = http://127.0.0.1:1
admin_token = nope
leader_public_key = """ + "00" * 32 + "\n"
    scenario = load_inline(tmp_path, text)
    report, code = run_scenario(scenario, tmp_path / "work", sim=False, echo=lambda *_: None)
    assert code == 2
    assert report.infrastructure_errors
