"""Minimal deterministic SVG writer (fixed attribute order, fixed number formatting)."""

from __future__ import annotations

from xml.sax.saxutils import escape, quoteattr


def num(x: float) -> str:
    text = f"{x:.2f}".rstrip("0").rstrip(".")
    return "0" if text in ("-0", "") else text


class Svg:
    def __init__(self, width: float, height: float, title: str = ""):
        self.width = width
        self.height = height
        self.parts: list[str] = []
        self.defs: list[str] = []
        if title:
            self.parts.append(f"<title>{escape(title)}</title>")

    def _attrs(self, attrs: dict) -> str:
        out = []
        for key, value in attrs.items():
            if value is None:
                continue
            if isinstance(value, float):
                value = num(value)
            out.append(f"{key.rstrip('_').replace('_', '-')}={quoteattr(str(value))}")
        return " ".join(out)

    def rect(self, x, y, w, h, **attrs):
        self.parts.append(f"<rect {self._attrs(dict(x=float(x), y=float(y), width=float(w), height=float(h), **attrs))}/>")

    def line(self, x1, y1, x2, y2, **attrs):
        self.parts.append(f"<line {self._attrs(dict(x1=float(x1), y1=float(y1), x2=float(x2), y2=float(y2), **attrs))}/>")

    def polyline(self, points, **attrs):
        pts = " ".join(f"{num(x)},{num(y)}" for x, y in points)
        self.parts.append(f"<polyline {self._attrs(dict(points=pts, fill='none', **attrs))}/>")

    def text(self, x, y, content, **attrs):
        self.parts.append(f"<text {self._attrs(dict(x=float(x), y=float(y), **attrs))}>{escape(str(content))}</text>")

    def raw_def(self, markup: str):
        self.defs.append(markup)

    def render(self) -> str:
        head = (f'<?xml version="1.0" encoding="UTF-8"?>\n'
                f'<svg xmlns="http://www.w3.org/2000/svg" width="{num(self.width)}" '
                f'height="{num(self.height)}" viewBox="0 0 {num(self.width)} {num(self.height)}" '
                f'font-family="Helvetica, Arial, sans-serif">')
        body = []
        if self.defs:
            body.append("<defs>" + "".join(self.defs) + "</defs>")
        body.extend(self.parts)
        return head + "\n" + "\n".join(body) + "\n</svg>\n"
