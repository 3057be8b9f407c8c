import math

from lobkit import scales
from lobkit.events import AddLimit, Market, TradingCalendar
from lobkit.types import Side


def constant_book_events(days, day_length=31501.0):
    """Two resting orders and a trade every 100 s that never moves the quotes."""
    evs = [AddLimit(0, 1, Side.BUY, 1000, 10**9), AddLimit(0, 2, Side.SELL, 1003, 10**9)]
    t = 50.0
    while t < days * day_length:
        evs.append(Market(t, Side.BUY if int(t) % 200 else Side.SELL, 5))
        t += 100
    return evs


def test_constant_book():
    cal = TradingCalendar(3)
    rows = {r.name: r for r in scales.measure_scales(constant_book_events(3), cal)}
    assert rows["mean_spread"].value == 3.0
    assert rows["mean_midquote"].value == 1001.5
    assert rows["median_width"].value == 3.0
    for name in ("abs_return_1min", "abs_return_10min", "abs_return_1day"):
        assert rows[name].value == 0.0, name
    assert rows["abs_return_1month"].status == "InsufficientData"
    assert rows["intertrade_time"].value == 100.0
    assert rows["relaxation_half_life"].status == "InsufficientData"


def test_one_day_month_row_flagged():
    rows = scales.measure_scales(constant_book_events(1), TradingCalendar(1))
    assert len(rows) == 9
    flagged = {r.name for r in rows if r.status == "InsufficientData"}
    assert {"abs_return_1day", "abs_return_1month"} <= flagged
    assert "mean_spread" not in flagged


def test_table_and_csv_formats():
    rows = scales.measure_scales(constant_book_events(1), TradingCalendar(1))
    table = scales.format_table(rows)
    assert table.splitlines()[0].split() == ["statistic", "value", "unit", "reference", "status"]
    assert len(table.splitlines()) == 10
    csv = scales.to_csv(rows).splitlines()
    assert csv[0] == "statistic,value,unit,status,reference,detail"
    assert csv[1].startswith("mean_spread,3.0,ticks,ok,1.9,")
    assert all(not math.isnan(r.value) for r in rows if r.value is not None)
