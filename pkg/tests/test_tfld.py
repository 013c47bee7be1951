import io

import numpy as np
import pytest

from ccnmdf import tfld
from ccnmdf.errors import ParseError, VersionError
from ccnmdf.manifolds import SPD, Power
from ccnmdf.synthetic import dti_field

GOLDEN = "TFLD 1\ndims 1 1 1 3\nvoxel 0 0 0 1 0 0 1 0 1\n"


def test_golden_identity_voxel():
    field = tfld.TensorField.from_array(np.eye(3)[None, None, None])
    buf = io.StringIO()
    tfld.write_tfld(field, buf)
    assert buf.getvalue() == GOLDEN
    back = tfld.parse_tfld(io.StringIO(GOLDEN))
    np.testing.assert_array_equal(back.voxels[0, 0, 0], np.eye(3))
    assert back.mask.all() and back.dims == (1, 1, 1) and back.n == 3


def test_round_trip_is_bit_exact():
    vox = dti_field((3, 2, 4), seed=1) * 1e-3
    field = tfld.TensorField.from_array(vox)
    buf = io.StringIO()
    tfld.write_tfld(field, buf)
    back = tfld.parse_tfld(io.StringIO(buf.getvalue()))
    assert back == field
    np.testing.assert_array_equal(back.voxels, field.voxels)
    buf2 = io.StringIO()
    tfld.write_tfld(back, buf2)
    assert buf2.getvalue() == buf.getvalue()


def test_comments_blank_lines_and_missing_voxels():
    text = "# header comment\n\nTFLD 1\n# grid\ndims 2 1 1 2\n\nvoxel 1 0 0 2 0 3\n"
    field = tfld.parse_tfld(io.StringIO(text))
    np.testing.assert_array_equal(field.mask[:, 0, 0], [False, True])
    np.testing.assert_array_equal(field.voxels[1, 0, 0], np.diag([2.0, 3.0]))


def test_non_pd_voxel_is_masked():
    text = "TFLD 1\ndims 2 1 1 2\nvoxel 0 0 0 1 0 1\nvoxel 1 0 0 1 2 1\n"
    field = tfld.parse_tfld(io.StringIO(text))
    np.testing.assert_array_equal(field.mask[:, 0, 0], [True, False])


@pytest.mark.parametrize("text, line", [
    ("", 1),
    ("TFLX 1\n", 1),
    ("TFLD 1\nsize 1 1 1 3\n", 2),
    ("TFLD 1\ndims 1 1 a 3\n", 2),
    ("TFLD 1\ndims 1 1 0 3\n", 2),
    ("TFLD 1\ndims 1 1 1 2\nvoxel 0 0 0 1 0\n", 3),
    ("TFLD 1\ndims 1 1 1 2\nvoxel 0 0 0 1 x 1\n", 3),
    ("TFLD 1\ndims 1 1 1 2\nvoxel 1 0 0 1 0 1\n", 3),
    ("TFLD 1\ndims 1 1 1 2\nvoxel 0 0 0 1 0 1\n\nvoxel 0 0 0 1 0 1\n", 5),
    ("TFLD 1\ndims 1 1 1 2\ntensor 0 0 0 1 0 1\n", 3),
])
def test_parse_errors_carry_line_numbers(text, line):
    with pytest.raises(ParseError) as exc:
        tfld.parse_tfld(io.StringIO(text))
    assert exc.value.line == line


def test_version_error():
    with pytest.raises(VersionError):
        tfld.parse_tfld(io.StringIO("TFLD 2\ndims 1 1 1 3\n"))


def test_extract_blocks_counts_and_order():
    vox = dti_field((8, 8, 8), seed=0)
    mask = np.ones((8, 8, 8), dtype=bool)
    mask[5, 1, 6] = False
    ds = tfld.extract_blocks(tfld.TensorField.from_array(vox, mask))
    assert len(ds.points) == 7
    assert ds.manifold == Power(SPD(3), 64)
    assert (4, 0, 4) not in {tuple(o) for o in ds.origins}
    np.testing.assert_array_equal(ds.origins[0], [0, 0, 0])
    # x-major order inside a block
    np.testing.assert_array_equal(ds.points[0][1], vox[0, 0, 1])
    np.testing.assert_array_equal(ds.points[0][4], vox[0, 1, 0])
    np.testing.assert_array_equal(ds.points[0][16], vox[1, 0, 0])


def test_partial_blocks_dropped():
    ds = tfld.extract_blocks(tfld.TensorField.from_array(dti_field((5, 4, 4))))
    assert len(ds.points) == 1 and ds.points.shape == (1, 64, 3, 3)
    empty = tfld.extract_blocks(tfld.TensorField.from_array(dti_field((3, 4, 4))))
    assert empty.points.shape == (0, 64, 3, 3)


def test_bundled_example():
    field = tfld.read_tfld(tfld.example_path())
    assert field.dims == (8, 8, 8) and field.mask.all()
    assert 1e-4 < np.median(np.trace(field.voxels, axis1=-2, axis2=-1)) / 3 < 1e-2
    assert len(tfld.extract_blocks(field).points) == 8


def test_file_round_trip(tmp_path):
    field = tfld.TensorField.from_array(dti_field((2, 2, 2), seed=4))
    tfld.save_tfld(field, tmp_path / "f.tfld")
    assert tfld.read_tfld(tmp_path / "f.tfld") == field
