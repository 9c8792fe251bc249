#include "seglab/pgm.hpp"

#include <fstream>
#include <limits>
#include <sstream>
#include <string>

namespace seglab {

namespace {

// next token, skipping whitespace and '#' comment lines
bool next_token(std::istream& in, std::string& tok) {
    for (;;) {
        int c = in.peek();
        if (c == EOF) return false;
        if (c == '#') {
            in.ignore(std::numeric_limits<std::streamsize>::max(), '\n');
            continue;
        }
        if (std::isspace(c)) {
            in.get();
            continue;
        }
        break;
    }
    return static_cast<bool>(in >> tok);
}

long parse_long(const std::string& tok, const char* what) {
    std::size_t pos = 0;
    long v = 0;
    try {
        v = std::stol(tok, &pos);
    } catch (const std::exception&) {
        throw invalid_input(std::string("pgm: bad ") + what + " '" + tok + "'");
    }
    if (pos != tok.size())
        throw invalid_input(std::string("pgm: bad ") + what + " '" + tok + "'");
    return v;
}

} // namespace

LabelField read_pgm(std::istream& in) {
    std::string tok;
    if (!next_token(in, tok) || tok != "P2")
        throw invalid_input("pgm: expected P2 magic");
    long w, h, maxval;
    if (!next_token(in, tok)) throw invalid_input("pgm: truncated header");
    w = parse_long(tok, "width");
    if (!next_token(in, tok)) throw invalid_input("pgm: truncated header");
    h = parse_long(tok, "height");
    if (!next_token(in, tok)) throw invalid_input("pgm: truncated header");
    maxval = parse_long(tok, "maxval");
    if (w <= 0 || h <= 0) throw invalid_input("pgm: non-positive dimensions");
    if (maxval < 2) throw invalid_input("pgm: maxval < 2 (need K >= 2 classes)");

    std::vector<int> labels;
    labels.reserve(static_cast<std::size_t>(w) * static_cast<std::size_t>(h));
    for (long i = 0; i < w * h; ++i) {
        if (!next_token(in, tok)) throw invalid_input("pgm: truncated pixel data");
        labels.push_back(static_cast<int>(parse_long(tok, "pixel")));
    }
    return LabelField(static_cast<std::size_t>(h), static_cast<std::size_t>(w),
                      static_cast<std::size_t>(maxval), std::move(labels));
}

LabelField read_pgm_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw invalid_input("pgm: cannot open " + path);
    return read_pgm(in);
}

void write_pgm(std::ostream& out, const LabelField& labels) {
    out << "P2\n" << labels.width() << " " << labels.height() << "\n"
        << labels.num_classes() << "\n";
    for (std::size_t r = 0; r < labels.height(); ++r) {
        for (std::size_t c = 0; c < labels.width(); ++c) {
            if (c) out << ' ';
            out << labels.at(r * labels.width() + c);
        }
        out << '\n';
    }
}

void write_pgm_file(const std::string& path, const LabelField& labels) {
    std::ofstream out(path);
    if (!out) throw invalid_input("pgm: cannot open " + path + " for writing");
    write_pgm(out, labels);
    if (!out) throw invalid_input("pgm: write failed for " + path);
}

} // namespace seglab
