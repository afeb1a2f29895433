#pragma once

#include <fstream>
#include <string>
#include <vector>

#include "skillcalc/errors.hpp"
#include "skillcalc/taskspec.hpp"
#include "skillcalc/tokens.hpp"

namespace skillcalc {

// Line format: `<expression>\t<answer>\n`, external alphabet, UTF-8.
inline void write_dataset(const std::vector<Sample>& samples, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    for (const Sample& s : samples)
        out << detokenize(s.input) << '\t' << detokenize(s.truth) << '\n';
    if (!out) throw IoError("write failed: " + path);
}

inline std::vector<Sample> read_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for reading: " + path);
    std::vector<Sample> samples;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos || tab == 0 || tab + 1 == line.size() ||
            line.find('\t', tab + 1) != std::string::npos)
            throw FormatError(lineno, "expected `<expression>\\t<answer>`");
        Sample s;
        try {
            s.input = tokenize(line.substr(0, tab));
            s.truth = tokenize(line.substr(tab + 1));
        } catch (const UnknownCharacter&) {
            throw FormatError(lineno, "unknown character");
        }
        samples.push_back(std::move(s));
    }
    return samples;
}

}  // namespace skillcalc
