#pragma once

#include <algorithm>
#include <complex>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace svg {

using cx = std::complex<double>;

inline std::string escape(const std::string& s)
{
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

struct Box {
    double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;
    bool empty = true;

    void add(cx z)
    {
        if (empty) {
            x0 = x1 = z.real();
            y0 = y1 = z.imag();
            empty = false;
            return;
        }
        x0 = std::min(x0, z.real());
        x1 = std::max(x1, z.real());
        y0 = std::min(y0, z.imag());
        y1 = std::max(y1, z.imag());
    }
    double width() const { return x1 - x0; }
    double height() const { return y1 - y0; }
};

// One panel per piece, laid out left to right. Drawing happens in piece coordinates; each
// panel is an affine group with the y axis pointing up.
class Canvas {
public:
    struct Panel {
        std::string title;
        Box box;
        std::vector<std::string> items;
    };

    Panel& panel(const std::string& title, Box box)
    {
        panels_.push_back({title, box, {}});
        return panels_.back();
    }

    static void polygon(Panel& p, const std::vector<cx>& pts, const std::string& style)
    {
        p.items.push_back("<polygon points=\"" + points(pts) + "\" " + style + "/>");
    }
    // Filled with diagonal hatching.
    static void hatch(Panel& p, const std::vector<cx>& pts)
    {
        p.items.push_back("<polygon points=\"" + points(pts) + "\" fill=\"url(#hatch@)\" stroke=\"none\"/>");
    }
    static void polyline(Panel& p, const std::vector<cx>& pts, const std::string& style)
    {
        p.items.push_back("<polyline points=\"" + points(pts) + "\" fill=\"none\" " + style + "/>");
    }
    static void dot(Panel& p, cx z, double r, const std::string& style)
    {
        std::ostringstream os;
        os.precision(12);
        os << "<circle cx=\"" << z.real() << "\" cy=\"" << z.imag() << "\" r=\"" << r << "\" " << style << "/>";
        p.items.push_back(os.str());
    }

    std::string str() const
    {
        const double pad = 20.0, size = 300.0;
        std::ostringstream os;
        os.precision(12);
        double total = pad;
        std::vector<double> scales, offsets;
        for (const auto& p : panels_) {
            double ext = std::max({p.box.width(), p.box.height(), 1e-9});
            scales.push_back(size / ext);
            offsets.push_back(total);
            total += size + pad;
        }
        os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
        os << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << total << "\" height=\""
           << size + 2.0 * pad + 20.0 << "\" viewBox=\"0 0 " << total << " " << size + 2.0 * pad + 20.0 << "\">\n";
        for (size_t k = 0; k < panels_.size(); ++k) {
            const Panel& p = panels_[k];
            double sc = scales[k];
            os << "<g>\n<text x=\"" << offsets[k] << "\" y=\"" << pad - 4.0 << "\" font-size=\"12\">" << escape(p.title)
               << "</text>\n";
            // piece coordinates -> panel: x' = off + sc (x - x0), y' = pad + size - sc (y - y0)
            os << "<g transform=\"matrix(" << sc << " 0 0 " << -sc << " " << offsets[k] - sc * p.box.x0 << " "
               << pad + size + sc * p.box.y0 << ")\" stroke-width=\"" << 1.5 / sc << "\">\n";
            double w = 8.0 / sc;
            os << "<defs><pattern id=\"hatch" << k << "\" width=\"" << w << "\" height=\"" << w
               << "\" patternUnits=\"userSpaceOnUse\" patternTransform=\"rotate(45)\"><line x1=\"0\" y1=\"0\" x2=\"0\" y2=\""
               << w << "\" stroke=\"#555555\" stroke-width=\"" << 1.0 / sc << "\"/></pattern></defs>\n";
            for (std::string it : p.items) {
                auto at = it.find("hatch@");
                if (at != std::string::npos) it.replace(at, 6, "hatch" + std::to_string(k));
                os << it << "\n";
            }
            os << "</g>\n</g>\n";
        }
        os << "</svg>\n";
        return os.str();
    }

    void write(const std::string& path) const
    {
        std::ofstream f(path);
        if (!f) throw std::runtime_error("cannot write " + path);
        f << str();
    }

private:
    std::vector<Panel> panels_;

    static std::string points(const std::vector<cx>& pts)
    {
        std::ostringstream os;
        os.precision(12);
        for (size_t k = 0; k < pts.size(); ++k) os << (k ? " " : "") << pts[k].real() << "," << pts[k].imag();
        return os.str();
    }
};

}  // namespace svg
