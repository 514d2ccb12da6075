#include "plepi/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace plepi {

bool contains(const Polygon& poly, Point p) noexcept {
    if (poly.size() < 3) return false;
    if (distance_to_boundary(poly, p) < 1e-12) return true;
    bool inside = false;
    for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
        const auto& a = poly[i];
        const auto& b = poly[j];
        if ((a.y > p.y) != (b.y > p.y)) {
            const double x = (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x;
            if (p.x < x) inside = !inside;
        }
    }
    return inside;
}

double distance_to_boundary(const Polygon& poly, Point p) noexcept {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
        const double ex = poly[i].x - poly[j].x;
        const double ey = poly[i].y - poly[j].y;
        const double len2 = ex * ex + ey * ey;
        double t = len2 > 0 ? ((p.x - poly[j].x) * ex + (p.y - poly[j].y) * ey) / len2 : 0.0;
        t = std::clamp(t, 0.0, 1.0);
        const double dx = poly[j].x + t * ex - p.x;
        const double dy = poly[j].y + t * ey - p.y;
        best = std::min(best, std::sqrt(dx * dx + dy * dy));
    }
    return best;
}

double area(const Polygon& poly) noexcept {
    double a = 0.0;
    for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++)
        a += (poly[j].x + poly[i].x) * (poly[j].y - poly[i].y);
    return std::abs(a) / 2.0;
}

Polygon clip_half_plane(const Polygon& poly, double a, double b, double c) {
    Polygon out;
    if (poly.empty()) return out;
    auto side = [&](Point p) { return a * p.x + b * p.y - c; };
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const Point cur = poly[i];
        const Point nxt = poly[(i + 1) % poly.size()];
        const double sc = side(cur);
        const double sn = side(nxt);
        if (sc <= 0) out.push_back(cur);
        if ((sc < 0 && sn > 0) || (sc > 0 && sn < 0)) {
            const double t = sc / (sc - sn);
            out.push_back({cur.x + t * (nxt.x - cur.x), cur.y + t * (nxt.y - cur.y)});
        }
    }
    return out;
}

Polygon voronoi_region(const std::vector<Point>& sites, std::size_t i, double w, double h) {
    Polygon poly{{0, 0}, {w, 0}, {w, h}, {0, h}};
    const Point ci = sites[i];
    for (std::size_t j = 0; j < sites.size() && !poly.empty(); ++j) {
        if (j == i) continue;
        const Point cj = sites[j];
        const double a = cj.x - ci.x;
        const double b = cj.y - ci.y;
        const double c = (cj.x * cj.x + cj.y * cj.y - ci.x * ci.x - ci.y * ci.y) / 2.0;
        poly = clip_half_plane(poly, a, b, c);
    }
    return poly;
}

Polygon shrink(const Polygon& poly, Point center, double factor) {
    Polygon out;
    out.reserve(poly.size());
    for (const auto& p : poly)
        out.push_back({center.x + factor * (p.x - center.x), center.y + factor * (p.y - center.y)});
    return out;
}

}  // namespace plepi
