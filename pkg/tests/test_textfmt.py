import pytest

from bushtype.errors import ParseError
from bushtype.groupring import parse_subset
from bushtype.textfmt import field_value, split_lines, uint_list
from bushtype.typeq import SpreadCertificate


def test_split_lines_rejects_control_characters():
    assert split_lines("a\nb\n") == ["a", "b"]
    with pytest.raises(ParseError) as exc:
        split_lines("ok\n1 2\x0b\n")
    assert exc.value.line == 2 and "column 4" in str(exc.value)


@pytest.mark.parametrize("text", ["1  2", " 1", "1 ", "+1", "1_0", "-3", "1\t2"])
def test_uint_list_is_strict(text):
    with pytest.raises(ParseError):
        uint_list(text)


def test_uint_list_accepts_canonical():
    assert uint_list("") == ()
    assert uint_list("0 10 7") == (0, 10, 7)
    assert uint_list("1,2", ",") == (1, 2)


def test_field_value_spacing():
    assert field_value(" 1 2") == "1 2"
    assert field_value("") == field_value(" ") == ""
    for bad in ("1 2", "  1", " 1 "):
        with pytest.raises(ParseError):
            field_value(bad)


def test_certificate_rejects_noncanonical_whitespace(cert3):
    text = cert3.to_text()
    back = SpreadCertificate.from_text(text)
    assert (back.C0, back.C1, back.labeling) == (cert3.C0, cert3.C1, cert3.labeling)
    for bad in (text.replace("\n", "\x0b\n", 1), text.replace(" ", "  ", 3), text + "C0: 1\n"):
        with pytest.raises(ParseError):
            SpreadCertificate.from_text(bad)


@pytest.mark.parametrize("row", ["0;1,2,0", "0;1,,2,0,0", "x;1,2,0,0", "0;1,2,0,0 ", "4;0,0,0,0", "0;3,0,0,0"])
def test_subset_rejects_bad_members(row):
    with pytest.raises(ParseError):
        parse_subset(f"GSET v1 klein=4 w=3^4\n{row}\n")
