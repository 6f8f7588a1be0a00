import csv
import io
import json
import shutil
import unittest

import numpy as np

from pilotwave.archive import RunArchive
from pilotwave.cli.manifest import MANIFEST_NAME, RunManifest, dumps, previous_outputs
from pilotwave.cli.writers import write_field, write_outcomes, write_summary, write_table
from pilotwave.experiments.outcomes import OutcomeRecord
from pilotwave.experiments.states import gaussian_packet
from pilotwave.fields import GridSpec, UnitSystem
from pilotwave.storage.filestorage import FileStorage


def read_output(archive, name):
    with archive.storage.openin(name) as in_file:
        return in_file.read()


class WriterTests(unittest.TestCase):

    def setUp(self):
        self.output_root = 'testwriters'
        shutil.rmtree(self.output_root, ignore_errors=True)
        self.archive = RunArchive(FileStorage(self.output_root))

    def tearDown(self):
        self.archive.close()
        shutil.rmtree(self.output_root, ignore_errors=True)

    def rows(self, name):
        return list(csv.reader(io.StringIO(read_output(self.archive, name).decode("utf-8"))))

    def test_field_columns_and_exact_values(self):
        psi = gaussian_packet(GridSpec(-8.0, 8.0, 32), 0.5, 1.0, 2.0)
        emitted = write_field(self.archive, "field.csv", psi)
        rows = self.rows("field.csv")
        self.assertEqual(rows[0], ["x", "re", "im"])
        self.assertEqual(len(rows), 33)
        self.assertEqual(emitted.meta["rows"], 32)
        values = np.array([complex(float(re), float(im)) for _, re, im in rows[1:]])
        np.testing.assert_array_equal(values, psi.values)

    def test_two_dimensional_field_columns(self):
        psi = gaussian_packet(GridSpec((-4.0, -4.0), (4.0, 4.0), (16, 16)))
        write_field(self.archive, "field.csv", psi)
        rows = self.rows("field.csv")
        self.assertEqual(rows[0], ["x", "y", "re", "im"])
        self.assertEqual(len(rows), 257)

    def test_paired_outcomes(self):
        records = [
            OutcomeRecord((0.0, 0.5), [1, -1], [-1, -1]),
            OutcomeRecord((1.0, 1.5), [1], [1]),
        ]
        write_outcomes(self.archive, "outcomes.csv", records)
        self.assertEqual(self.rows("outcomes.csv"), [
            ["run_id", "setting_a", "setting_b", "outcome_1", "outcome_2"],
            ["0", "0.0", "0.5", "1", "-1"],
            ["0", "0.0", "0.5", "-1", "-1"],
            ["1", "1.0", "1.5", "1", "1"],
        ])

    def test_single_sided_outcomes_leave_blanks(self):
        write_outcomes(self.archive, "outcomes.csv", [OutcomeRecord((0.25,), [-1])])
        self.assertEqual(self.rows("outcomes.csv")[1], ["0", "0.25", "", "-1", ""])

    def test_table_floats_round_trip(self):
        write_table(self.archive, "tv.csv", ("t", "tv"), [(0.1, 1.0 / 3.0)])
        row = self.rows("tv.csv")[1]
        self.assertEqual(float(row[1]), 1.0 / 3.0)

    def test_summary_is_canonical_json(self):
        write_summary(self.archive, "summary.json", {"b": 1, "a": [1.5]})
        text = read_output(self.archive, "summary.json").decode("utf-8")
        self.assertEqual(text, dumps({"a": [1.5], "b": 1}))
        self.assertEqual(json.loads(text), {"a": [1.5], "b": 1})


class ManifestTests(unittest.TestCase):

    def setUp(self):
        self.output_root = 'testmanifest'
        shutil.rmtree(self.output_root, ignore_errors=True)
        self.archive = RunArchive(FileStorage(self.output_root))

    def tearDown(self):
        self.archive.close()
        shutil.rmtree(self.output_root, ignore_errors=True)

    def test_manifest_lists_files_in_commit_order(self):
        first = self.archive.add("b.csv", b'1')
        second = self.archive.add("a.csv", b'2')
        manifest = RunManifest("evolve", {"seed": 3}, 3, GridSpec(-8.0, 8.0, 32), UnitSystem(2.0))
        manifest.write(self.archive)
        document = json.loads(read_output(self.archive, MANIFEST_NAME).decode("utf-8"))
        self.assertEqual([entry["name"] for entry in document["files"]], ["b.csv", "a.csv"])
        self.assertEqual(document["files"][0]["sha256"], first.digest)
        self.assertEqual(document["files"][1]["sha256"], second.digest)
        self.assertEqual(document["grid"], {"lower": [-8.0], "upper": [8.0], "points": [32]})
        self.assertEqual(document["units"]["hbar"], 2.0)
        self.assertEqual(document["seed"], 3)
        self.assertIsNotNone(document["finished"])

    def test_rewriting_does_not_list_the_manifest(self):
        manifest = RunManifest("nogo", {})
        manifest.write(self.archive)
        manifest.write(self.archive)
        self.assertEqual(manifest.files, [])

    def test_previous_outputs_are_the_listed_files_then_the_manifest(self):
        self.archive.add("b.csv", b'1')
        self.archive.add("a.csv", b'2')
        RunManifest("evolve", {}).write(self.archive)
        storage = self.archive.storage
        with storage.openout("notes.txt") as out_file:
            out_file.write(b'kept')
        self.assertEqual(previous_outputs(storage), ["b.csv", "a.csv", MANIFEST_NAME])

    def test_no_previous_manifest(self):
        self.archive.add("a.csv", b'2')
        self.assertEqual(previous_outputs(self.archive.storage), [])

    def test_unreadable_previous_manifest_is_ignored(self):
        self.archive.add(MANIFEST_NAME, b'{not json')
        with self.assertLogs("pilotwave.cli.manifest", level="WARNING"):
            self.assertEqual(previous_outputs(self.archive.storage), [])


if __name__ == '__main__':
    unittest.main()
