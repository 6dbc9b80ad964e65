#include "eoslab/plots.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace eos {

namespace {

constexpr double W = 900, H = 480, L = 80, R = 80, T = 40, B = 60;

struct Range {
    double lo = 0, hi = 1;
};

Range range_of(const std::vector<const Series*>& ss, bool log) {
    double lo = INFINITY, hi = -INFINITY;
    for (auto* s : ss)
        for (double v : s->y) {
            if (!std::isfinite(v) || (log && v <= 0)) continue;
            double w = log ? std::log10(v) : v;
            lo = std::min(lo, w);
            hi = std::max(hi, w);
        }
    if (!std::isfinite(lo)) return {};
    if (hi - lo < 1e-12 * std::max(1.0, std::fabs(hi))) {
        lo -= 0.5;
        hi += 0.5;
    }
    double pad = 0.05 * (hi - lo);
    return {lo - pad, hi + pad};
}

std::string fmt(double v) {
    char b[32];
    std::snprintf(b, sizeof b, "%.4g", v);
    return b;
}

std::string esc(const std::string& s) {
    std::string o;
    for (char c : s) {
        if (c == '<') o += "&lt;";
        else if (c == '>') o += "&gt;";
        else if (c == '&') o += "&amp;";
        else o += c;
    }
    return o;
}

}  // namespace

std::string render_svg(const PlotSpec& p) {
    std::vector<const Series*> left, right;
    double x0 = INFINITY, x1 = -INFINITY;
    for (const auto& s : p.series) {
        (s.right ? right : left).push_back(&s);
        for (double x : s.x) {
            x0 = std::min(x0, x);
            x1 = std::max(x1, x);
        }
    }
    if (!std::isfinite(x0)) x0 = 0, x1 = 1;
    if (x1 <= x0) x1 = x0 + 1;
    Range ly = range_of(left, false), ry = range_of(right, p.logRight);
    if (p.hline) {
        ly.lo = std::min(ly.lo, *p.hline);
        ly.hi = std::max(ly.hi, *p.hline * 1.02);
    }
    const double pw = W - L - R, ph = H - T - B;
    auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * pw; };
    auto pyl = [&](double y) { return T + ph - (y - ly.lo) / (ly.hi - ly.lo) * ph; };
    auto pyr = [&](double y) {
        double w = p.logRight ? std::log10(y) : y;
        return T + ph - (w - ry.lo) / (ry.hi - ry.lo) * ph;
    };

    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << esc(p.title) << "</text>\n";
    o << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"#333\"/>\n";

    for (int i = 0; i <= 5; ++i) {
        double xv = x0 + (x1 - x0) * i / 5.0;
        o << "<text x=\"" << px(xv) << "\" y=\"" << T + ph + 18 << "\" text-anchor=\"middle\">" << fmt(xv)
          << "</text>\n";
        double yv = ly.lo + (ly.hi - ly.lo) * i / 5.0;
        o << "<text x=\"" << L - 6 << "\" y=\"" << pyl(yv) + 4 << "\" text-anchor=\"end\">" << fmt(yv) << "</text>\n";
        if (!right.empty()) {
            double rv = ry.lo + (ry.hi - ry.lo) * i / 5.0;
            double shown = p.logRight ? std::pow(10.0, rv) : rv;
            double yy = T + ph - (rv - ry.lo) / (ry.hi - ry.lo) * ph;
            o << "<text x=\"" << L + pw + 6 << "\" y=\"" << yy + 4 << "\">" << fmt(shown) << "</text>\n";
        }
    }
    o << "<text x=\"" << L + pw / 2 << "\" y=\"" << H - 15 << "\" text-anchor=\"middle\">" << esc(p.xlabel)
      << "</text>\n";
    o << "<text transform=\"translate(18," << T + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
      << esc(p.leftLabel) << "</text>\n";
    if (!right.empty())
        o << "<text transform=\"translate(" << W - 12 << "," << T + ph / 2 << ") rotate(90)\" text-anchor=\"middle\">"
          << esc(p.rightLabel) << "</text>\n";

    if (p.hline) {
        double y = pyl(*p.hline);
        o << "<line x1=\"" << L << "\" x2=\"" << L + pw << "\" y1=\"" << y << "\" y2=\"" << y
          << "\" stroke=\"#d62728\" stroke-dasharray=\"6,4\"/>\n";
        o << "<text x=\"" << L + pw - 4 << "\" y=\"" << y - 4 << "\" text-anchor=\"end\" fill=\"#d62728\">"
          << esc(p.hlineLabel) << "</text>\n";
    }

    for (const auto& s : p.series) {
        auto yf = [&](double y) { return s.right ? pyr(y) : pyl(y); };
        if (s.points) {
            for (std::size_t i = 0; i < s.x.size(); ++i) {
                if (!std::isfinite(s.y[i]) || (s.right && p.logRight && s.y[i] <= 0)) continue;
                o << "<circle cx=\"" << px(s.x[i]) << "\" cy=\"" << yf(s.y[i]) << "\" r=\"2.5\" fill=\"" << s.color
                  << "\"/>\n";
            }
            continue;
        }
        o << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.2\" points=\"";
        // thin long runs to roughly one point per pixel column
        std::size_t stride = std::max<std::size_t>(1, s.x.size() / 2000);
        for (std::size_t i = 0; i < s.x.size(); i += stride) {
            if (!std::isfinite(s.y[i]) || (s.right && p.logRight && s.y[i] <= 0)) continue;
            char b[64];
            std::snprintf(b, sizeof b, "%.2f,%.2f ", px(s.x[i]), yf(s.y[i]));
            o << b;
        }
        o << "\"/>\n";
    }

    double ly0 = T + 14;
    for (const auto& s : p.series) {
        o << "<rect x=\"" << L + 10 << "\" y=\"" << ly0 - 9 << "\" width=\"12\" height=\"10\" fill=\"" << s.color
          << "\"/>";
        o << "<text x=\"" << L + 28 << "\" y=\"" << ly0 << "\">" << esc(s.label) << (s.right ? " (right)" : "")
          << "</text>\n";
        ly0 += 16;
    }
    o << "</svg>\n";
    return o.str();
}

void write_run_plots(const std::string& dir, const std::vector<TrajectoryRecord>& records, double eta, std::size_t n) {
    std::vector<double> t, lam, loss, an, rn, rpn, dv;
    std::vector<double> at, aa;
    for (const auto& r : records) {
        t.push_back(double(r.t));
        lam.push_back(r.lambda1);
        loss.push_back(r.loss);
        an.push_back(r.Anorm2);
        rn.push_back(r.Rnorm2 / double(n));
        rpn.push_back(r.RprimeNorm2 / double(n));
        dv.push_back(r.Dtv1 * r.Dtv1 / double(n));
        if (r.anomaly) {
            at.push_back(double(r.t));
            aa.push_back(r.lambda1);
        }
    }
    auto save = [&](const std::string& name, const PlotSpec& p) {
        std::ofstream out(std::filesystem::path(dir) / name, std::ios::binary);
        out << render_svg(p);
    };

    PlotSpec a;
    a.title = "sharpness and training loss";
    a.leftLabel = "sharpness";
    a.rightLabel = "loss";
    a.logRight = true;
    a.hline = 2.0 / eta;
    a.hlineLabel = "2/eta";
    a.series.push_back({"sharpness", t, lam, "#1f77b4"});
    a.series.push_back({"loss", t, loss, "#2ca02c", true});
    save("sharpness_loss.svg", a);

    PlotSpec b;
    b.title = "output-layer norm and sharpness";
    b.leftLabel = "sharpness";
    b.rightLabel = "||A||^2";
    b.hline = 2.0 / eta;
    b.hlineLabel = "2/eta";
    b.series.push_back({"sharpness", t, lam, "#1f77b4"});
    b.series.push_back({"||A||^2", t, an, "#ff7f0e", true});
    b.series.push_back({"anomaly", at, aa, "#d62728", false, true});
    save("anorm_sharpness.svg", b);

    PlotSpec c;
    c.title = "residual split along v1";
    c.leftLabel = "value / n";
    c.rightLabel = "";
    c.series.push_back({"||R||^2/n", t, rn, "#9467bd"});
    c.series.push_back({"||R'||^2/n", t, rpn, "#8c564b"});
    c.series.push_back({"(D^T v1)^2/n", t, dv, "#17becf"});
    save("r_decomposition.svg", c);
}

}  // namespace eos
