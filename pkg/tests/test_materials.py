import numpy as np
import pytest

from fwmbs.errors import MaterialEvalError, ValidationError
from fwmbs.materials import (
    default_material_db,
    load_material_db,
    refractive_index,
)

GOOD = """
[SiO2]
kind = sellmeier
B = 0.6961663 0.4079426 0.8974794
C_um2 = 0.00467914825849 0.013512063074 97.934002537921
range_nm = 210 3710

[Si3N4]
kind = sellmeier
B = 3.0249 40314.0
C_um2 = 0.01831707800836 1537208.184964
range_nm = 310 5504

[Air]
kind = constant
n = 1.0
range_nm = 150 20000
"""


def write(tmp_path, text, name="mat.ini"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


class TestLoading:
    def test_happy_path(self, tmp_path):
        db = load_material_db(write(tmp_path, GOOD))
        assert db.names() == ["Air", "Si3N4", "SiO2"]

    def test_duplicate_name_rejected(self, tmp_path):
        text = GOOD + "\n[SiO2]\nkind = constant\nn = 1.5\nrange_nm = 400 800\n"
        with pytest.raises(ValidationError, match="duplicate"):
            load_material_db(write(tmp_path, text))

    def test_missing_c_field(self, tmp_path):
        text = "[X]\nkind = sellmeier\nB = 1.0\nrange_nm = 400 800\n"
        with pytest.raises(ValidationError, match="C_um2"):
            load_material_db(write(tmp_path, text))

    def test_unknown_field_rejected(self, tmp_path):
        text = "[Air]\nkind = constant\nn = 1.0\nrange_nm = 400 800\nbogus = 3\n"
        with pytest.raises(ValidationError, match="bogus"):
            load_material_db(write(tmp_path, text))

    def test_unknown_kind(self, tmp_path):
        text = "[X]\nkind = tabulated\nrange_nm = 400 800\n"
        with pytest.raises(ValidationError, match="kind"):
            load_material_db(write(tmp_path, text))

    def test_bad_range_order(self, tmp_path):
        text = "[Air]\nkind = constant\nn = 1.0\nrange_nm = 800 400\n"
        with pytest.raises(ValidationError, match="range_nm"):
            load_material_db(write(tmp_path, text))

    def test_length_mismatch(self, tmp_path):
        text = "[X]\nkind = sellmeier\nB = 1.0 2.0\nC_um2 = 0.01\nrange_nm = 400 800\n"
        with pytest.raises(ValidationError, match="same length"):
            load_material_db(write(tmp_path, text))

    def test_pole_inside_range_rejected(self, tmp_path):
        # pole at 0.6 um inside [400, 800] nm
        text = "[X]\nkind = sellmeier\nB = 1.0\nC_um2 = 0.36\nrange_nm = 400 800\n"
        with pytest.raises(ValidationError, match="pole"):
            load_material_db(write(tmp_path, text))

    def test_missing_file(self, tmp_path):
        with pytest.raises(ValidationError, match="not found"):
            load_material_db(tmp_path / "nope.ini")

    def test_unknown_material_lookup(self, db):
        with pytest.raises(ValidationError, match="unknown material"):
            refractive_index(db, "GaAs", 1550e-9)


class TestIndices:
    def test_fused_silica_1550(self, db):
        # published value for fused silica at 1550 nm
        assert refractive_index(db, "SiO2", 1550e-9) == pytest.approx(1.444, abs=5e-4)

    def test_si3n4_1550(self, db):
        assert refractive_index(db, "Si3N4", 1550e-9) == pytest.approx(2.0, abs=0.05)

    def test_air_exact_one(self, db):
        for lam in (500e-9, 980e-9, 1550e-9, 3000e-9):
            assert refractive_index(db, "Air", lam) == 1.0

    def test_out_of_range(self, db):
        with pytest.raises(MaterialEvalError, match="validity"):
            refractive_index(db, "SiO2", 100e-9)
        with pytest.raises(MaterialEvalError, match="validity"):
            refractive_index(db, "SiO2", 5000e-9)

    def test_pole_guard(self):
        # loading rejects ranges that reach the guard band, so exercise the
        # guard on a directly built model
        from fwmbs.materials import SellmeierModel
        model = SellmeierModel(name="X", b=(1.0,), c_um2=(1.0,),
                               range_m=(400e-9, 1100e-9))
        with pytest.raises(MaterialEvalError, match="pole"):
            model.index(1000.0000001e-9)

    def test_continuous_and_finite_over_range(self, db):
        for name in ("SiO2", "Si3N4"):
            model = db.get(name)
            lo, hi = model.range_m
            lam = np.linspace(lo * (1 + 1e-9), hi * (1 - 1e-9), 512)
            n = model.index(lam)
            assert np.all(np.isfinite(n))
            assert np.all(n > 1.0)
            # no jumps: neighboring samples stay close
            assert np.max(np.abs(np.diff(n))) < 0.05

    def test_normal_dispersion_600_1600(self, db):
        # dn/dlambda < 0 checked by finite difference
        lam = np.linspace(600e-9, 1600e-9, 201)
        for name in ("SiO2", "Si3N4"):
            n = db.get(name).index(lam)
            assert np.all(np.diff(n) < 0.0), name


class TestDefaultDb:
    def test_bundled_db_loads(self):
        db = default_material_db()
        assert {"SiO2", "Si3N4", "Air"} <= set(db.names())
