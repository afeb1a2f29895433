#include <catch2/catch_amalgamated.hpp>

#include <fstream>

#include "helpers.hpp"
#include "skillcalc/dataset.hpp"
#include "skillcalc/generate.hpp"

using namespace skillcalc;
using testutil::TempDir;
using testutil::slurp;

TEST_CASE("datasets are written as tab separated lines") {
    TempDir tmp;
    Sample s;
    s.input = tokenize("12+3");
    s.truth = tokenize("15");
    const std::string path = tmp.file("one.tsv");
    write_dataset({s}, path);
    CHECK(slurp(path) == "12+3\t15\n");
}

TEST_CASE("datasets round trip exactly") {
    TempDir tmp;
    TaskSpec spec = builtin_task("EXPR");
    Rng rng(17);
    auto data = generate_dataset(spec, 1000, rng);
    const std::string path = tmp.file("round.tsv");
    write_dataset(data, path);
    auto back = read_dataset(path);
    REQUIRE(back.size() == data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        CHECK(back[i].input == data[i].input);
        CHECK(back[i].truth == data[i].truth);
    }
}

TEST_CASE("missing tab is a format error with the line number") {
    TempDir tmp;
    const std::string path = tmp.file("bad.tsv");
    {
        std::ofstream out(path, std::ios::binary);
        out << "12+3 15\n";
    }
    try {
        read_dataset(path);
        FAIL("expected FormatError");
    } catch (const FormatError& e) {
        CHECK(e.line == 1);
    }
}

TEST_CASE("format errors report the offending line, not the first") {
    TempDir tmp;
    const std::string path = tmp.file("bad2.tsv");
    {
        std::ofstream out(path, std::ios::binary);
        out << "1+1\t2\n"
            << "2+2\t4\n"
            << "3+3\tfour\n";
    }
    try {
        read_dataset(path);
        FAIL("expected FormatError");
    } catch (const FormatError& e) {
        CHECK(e.line == 3);
    }
}

TEST_CASE("blank lines and trailing carriage returns are tolerated") {
    TempDir tmp;
    const std::string path = tmp.file("crlf.tsv");
    {
        std::ofstream out(path, std::ios::binary);
        out << "1+1\t2\r\n\n"
            << "9*9\t81\n";
    }
    auto data = read_dataset(path);
    REQUIRE(data.size() == 2);
    CHECK(data[0].truth == tokenize("2"));
    CHECK(data[1].input == tokenize("9*9"));
}

TEST_CASE("double tab and empty fields are rejected") {
    TempDir tmp;
    for (const char* line : {"1+1\t\t2", "\t2", "1+1\t"}) {
        const std::string path = tmp.file("field.tsv");
        {
            std::ofstream out(path, std::ios::binary);
            out << line << "\n";
        }
        CHECK_THROWS_AS(read_dataset(path), FormatError);
    }
}

TEST_CASE("io errors surface for unusable paths") {
    CHECK_THROWS_AS(read_dataset("/nonexistent/nowhere.tsv"), IoError);
    CHECK_THROWS_AS(write_dataset({}, "/nonexistent/nowhere.tsv"), IoError);
}
