import math
from collections import Counter
from pathlib import Path

import numpy as np
import pytest

from cvdloss.cards import step_card, write_labeled_corpus
from cvdloss.imageio import write_png
from cvdloss.pipeline import (
    DEFAULT_CATEGORIES,
    DatasetManifest,
    EvaluationRecord,
    ImageRecord,
    ManifestError,
    baselines,
    daltonization_experiment,
    default_workers,
    discover_manifest,
    evaluate_corpus,
    format_manifest,
    load_prompts,
    normalize_by_standard,
    parse_manifest,
    prompt_text,
    summarize,
)
from cvdloss.simulation import PROMPT_TYPES, Deficiency

P, D = Deficiency.PROTANOPIA, Deficiency.DEUTERANOPIA


def rec(log10, category="flower", prompt="standard", d=P, name=None):
    image = ImageRecord(Path(name or f"{category}-{prompt}-{log10}.png"), category, prompt)
    value = None if log10 is None else 10.0**log10
    return EvaluationRecord(image, d, value=value, log10=log10, error=None if log10 is not None else "x")


# Manifests --------------------------------------------------------------------------------------


def test_parse_manifest_resolves_relative_paths():
    text = "# a comment\npath\tcategory\tprompt_type\tseed\na.png\tflower\tstandard\t7\n/abs/b.png\tparrot\tprotanopia_aware\t\n"
    m = parse_manifest(text, "/data")
    assert [r.path for r in m.records] == [Path("/data/a.png"), Path("/abs/b.png")]
    assert m.records[0].seed == 7 and m.records[1].seed is None
    assert len(m) == 2


def test_parse_manifest_seed_column_is_optional():
    m = parse_manifest("category\tpath\tprompt_type\ncandy\tx.png\tstandard\n")
    assert m.records[0].category == "candy"


@pytest.mark.parametrize(
    "text, message",
    [
        ("", "empty"),
        ("path\tcategory\nx.png\tflower\n", "prompt_type"),
        ("path\tcategory\tprompt_type\nx.png\tdinosaur\tstandard\n", "candy, cartoon"),
        ("path\tcategory\tprompt_type\nx.png\tflower\tcolourblind\n", "protanopia_aware"),
        ("path\tcategory\tprompt_type\nx.png\tflower\tstandard\nx.png\tflower\tstandard\n", "duplicate"),
        ("path\tcategory\tprompt_type\nx.png\tflower\n", "expected 3 fields"),
        ("path\tcategory\tprompt_type\tseed\nx.png\tflower\tstandard\tabc\n", "not an integer"),
    ],
)
def test_parse_manifest_errors(text, message):
    with pytest.raises(ManifestError, match=message):
        parse_manifest(text)


def test_category_directive_and_extra_categories():
    body = "path\tcategory\tprompt_type\nx.png\tdinosaur\tstandard\n"
    assert parse_manifest("# categories: dinosaur, robot\n" + body).category_vocabulary[-2:] == ("dinosaur", "robot")
    assert "dinosaur" in parse_manifest(body, extra_categories=["dinosaur"]).category_vocabulary


def test_format_manifest_round_trips(tmp_path):
    text = "# categories: robot\npath\tcategory\tprompt_type\tseed\nr/a.png\trobot\tstandard\t3\nb.png\tfruit\tdeuteranopia_aware\t\n"
    m = parse_manifest(text, tmp_path)
    again = format_manifest(m, relative_to=tmp_path)
    assert again == text
    assert parse_manifest(again, tmp_path) == m


def test_load_manifest_missing_file(tmp_path):
    from cvdloss.pipeline import load_manifest

    with pytest.raises(ManifestError, match="not found"):
        load_manifest(tmp_path / "nope.tsv")


def test_discover_manifest_layout(tmp_path):
    write_labeled_corpus(tmp_path, per_cell=1, size=8)
    m = discover_manifest(tmp_path)
    assert len(m) == 32
    assert {r.category for r in m.records} == set(DEFAULT_CATEGORIES)
    with pytest.raises(ManifestError, match="no <category>"):
        discover_manifest(tmp_path / "flower" / "standard")


def test_discover_manifest_rejects_unknown_prompt_directory(tmp_path):
    (tmp_path / "flower" / "weird").mkdir(parents=True)
    write_png(tmp_path / "flower" / "weird" / "a.png", np.zeros((2, 2, 3), dtype=np.uint8))
    with pytest.raises(ManifestError, match="unknown prompt_type 'weird'"):
        discover_manifest(tmp_path)


def test_dataset_manifest_requires_records():
    with pytest.raises(ManifestError):
        DatasetManifest(())


# Evaluation ------------------------------------------------------------------------------------


@pytest.fixture(scope="module")
def labeled(tmp_path_factory):
    root = tmp_path_factory.mktemp("labeled")
    write_labeled_corpus(root, per_cell=2, size=16)
    return discover_manifest(root)


def test_routing_counts_per_image(labeled):
    records = evaluate_corpus(labeled)
    per_image = Counter(r.image.path for r in records)
    for image in labeled.records:
        expected = 2 if image.prompt_type in ("standard", "colorblind_aware") else 1
        assert per_image[image.path] == expected
    assert len(records) == 8 * 2 * (2 + 2 + 1 + 1)
    assert all(r.ok for r in records)


def test_worker_count_does_not_change_results(labeled):
    assert evaluate_corpus(labeled, workers=1) == evaluate_corpus(labeled, workers=2)


def test_bad_images_become_error_records(tmp_path):
    write_png(tmp_path / "flat.png", np.full((8, 8, 3), 50, dtype=np.uint8))
    (tmp_path / "junk.png").write_bytes(b"not a png")
    write_png(tmp_path / "gray.png", np.tile(np.arange(0, 256, 32, dtype=np.uint8)[None, :, None], (8, 1, 3)))
    write_png(tmp_path / "ok.png", step_card((230, 20, 20), (20, 200, 20), 8, 8))
    text = "path\tcategory\tprompt_type\n" + "".join(
        f"{n}.png\tposter\tstandard\n" for n in ("flat", "junk", "gray", "ok")
    )
    records = evaluate_corpus(parse_manifest(text, tmp_path))
    by_name = {}
    for r in records:
        by_name.setdefault(r.image.path.stem, []).append(r)
    assert all("degenerate reference" in r.error for r in by_name["flat"])
    assert all(r.error.startswith("unreadable image") for r in by_name["junk"])
    assert all("degenerate" in r.error and r.value is None for r in by_name["gray"])
    assert all(r.ok and r.value > 0 for r in by_name["ok"])


def test_default_workers_env(monkeypatch):
    monkeypatch.delenv("CVDLOSS_WORKERS", raising=False)
    assert default_workers() == 1
    monkeypatch.setenv("CVDLOSS_WORKERS", "3")
    assert default_workers() == 3
    monkeypatch.setenv("CVDLOSS_WORKERS", "many")
    with pytest.raises(ValueError, match="CVDLOSS_WORKERS"):
        default_workers()


# Normalization ---------------------------------------------------------------------------------


def test_normalization_example():
    records = [rec(-2.0, name="s1"), rec(-4.0, name="s2"), rec(-2.5, prompt="protanopia_aware", name="p")]
    out = normalize_by_standard(records)
    assert [r.normalized for r in out] == [1.0, -1.0, 0.5]
    assert baselines(records) == {("flower", P): -3.0}


def test_groups_without_baseline_stay_unnormalized():
    records = [
        rec(-2.0, name="s"),
        rec(-3.0, category="candy", prompt="colorblind_aware", name="c"),
        rec(None, category="fruit", name="bad"),
    ]
    out = normalize_by_standard(records)
    assert out[0].normalized == 0.0
    assert out[1].normalized is None and out[2].normalized is None
    base = baselines(records)
    assert base[("candy", P)] is None and base[("fruit", P)] is None


def test_baselines_are_per_deficiency():
    records = [rec(-2.0, d=P, name="a"), rec(-5.0, d=D, name="a")]
    assert baselines(records) == {("flower", P): -2.0, ("flower", D): -5.0}


def test_summarize_counts_and_quartiles():
    records = normalize_by_standard([rec(v, name=str(v)) for v in (-1.0, -2.0, -3.0, -4.0)] + [rec(None, name="e")])
    (s,) = summarize(records)
    assert (s.count, s.errors) == (4, 1)
    assert s.log10.median == -2.5 and s.log10.q1 == -3.25 and s.log10.q3 == -1.75
    assert s.baseline == -2.5
    assert math.isclose(s.normalized.mean, 0.0, abs_tol=1e-15)


# Daltonization experiment ---------------------------------------------------------------------


def test_daltonization_experiment_covers_standard_images(labeled):
    exp = daltonization_experiment(labeled)
    standard = [r for r in labeled.records if r.prompt_type == "standard"]
    assert len(exp.deltas) == 2 * len(standard)
    assert set(exp.summaries) == {(c, d) for c in DEFAULT_CATEGORIES for d in Deficiency}
    assert exp.excluded == 0
    assert all(dist.count == 2 for dist in exp.summaries.values())


def test_daltonization_experiment_requires_standard_images():
    m = DatasetManifest((ImageRecord(Path("a.png"), "flower", "protanopia_aware"),))
    with pytest.raises(ManifestError, match="nothing to verify"):
        daltonization_experiment(m)


def test_daltonization_experiment_excludes_degenerate(tmp_path):
    write_png(tmp_path / "flat.png", np.full((8, 8, 3), 50, dtype=np.uint8))
    m = parse_manifest("path\tcategory\tprompt_type\nflat.png\tcandy\tstandard\n", tmp_path)
    exp = daltonization_experiment(m)
    assert exp.excluded == 2
    assert all(v is None for v in exp.summaries.values())


# Prompts ---------------------------------------------------------------------------------------


def test_prompt_text_and_bundled_prompts():
    assert prompt_text("A parrot on a branch.", "protanopia_aware") == (
        "A parrot on a branch with protanopia-friendly palette."
    )
    assert prompt_text("A parrot", "standard") == "A parrot."
    with pytest.raises(ValueError):
        prompt_text("x", "bogus")
    prompts = load_prompts()
    assert set(prompts) == {(c, p) for c in DEFAULT_CATEGORIES for p in PROMPT_TYPES}
