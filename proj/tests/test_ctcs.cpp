#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <fstream>

#include "helpers.hpp"
#include "skillcalc/ctcs.hpp"

using namespace skillcalc;
using testutil::TempDir;

TEST_CASE("zero difficulties sample uniformly") {
    VectorXd p = sample_probabilities({0, 0, 0, 0}, 10.0);
    REQUIRE(p.size() == 4);
    for (int i = 0; i < 4; ++i) CHECK(p(i) == Catch::Approx(0.25).margin(1e-12));
}

TEST_CASE("difficulty ten at temperature ten splits about 73/27") {
    VectorXd p = sample_probabilities({10, 0}, 10.0);
    CHECK(p(0) == Catch::Approx(0.731058578630005).margin(1e-6));
    CHECK(p(1) == Catch::Approx(0.268941421369995).margin(1e-6));
    CHECK(p.sum() == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("a very large temperature flattens the distribution") {
    VectorXd p = sample_probabilities({100, 0, 50}, 1e9);
    for (int i = 0; i < 3; ++i) CHECK(p(i) == Catch::Approx(1.0 / 3.0).margin(1e-6));
}

TEST_CASE("sampling probabilities are shift invariant") {
    VectorXd a = sample_probabilities({5, 17, 0, 3}, 10.0);
    VectorXd b = sample_probabilities({105, 117, 100, 103}, 10.0);
    CHECK((a - b).norm() < 1e-12);
}

TEST_CASE("draw frequencies track the target distribution") {
    std::vector<long> d{10, 0};
    VectorXd p = sample_probabilities(d, 10.0);
    Rng rng(31337);
    const int n = 100000;
    std::vector<long> counts(2, 0);
    for (int i = 0; i < n; ++i) ++counts[static_cast<std::size_t>(draw_one(d, 10.0, rng))];
    double l1 = 0.0;
    for (int i = 0; i < 2; ++i)
        l1 += std::abs(static_cast<double>(counts[static_cast<std::size_t>(i)]) / n - p(i));
    CHECK(l1 < 0.02);
}

TEST_CASE("a single-sample pool is drawn every time") {
    std::vector<long> d{42};
    Rng rng(5);
    for (int i = 0; i < 50; ++i) CHECK(draw_one(d, 10.0, rng) == 0);
}

TEST_CASE("draws are deterministic under a fixed seed") {
    std::vector<long> d{3, 1, 4, 1, 5};
    Rng a(777), b(777);
    CHECK(draw_batch(d, 10.0, 64, a) == draw_batch(d, 10.0, 64, b));
}

TEST_CASE("entropy coefficient follows the hardest sample, capped at beta") {
    CHECK(entropy_coefficient({0, 0, 0}) == 0.0);
    CHECK(entropy_coefficient({10, 2, 0}) == Catch::Approx(0.1));
    CHECK(entropy_coefficient({200, 2, 0}) == Catch::Approx(0.5));
    CHECK(entropy_coefficient({2000, 0}) == Catch::Approx(0.5));  // capped
    CHECK(entropy_coefficient({30, 0}, 0.5, 0.01) <= entropy_coefficient({60, 0}, 0.5, 0.01));
}

TEST_CASE("incorrect answers bump difficulty and reset the streak") {
    DifficultyState st(3);
    st.record(1, false);
    st.record(1, false);
    CHECK(st.counts() == std::vector<long>{0, 2, 0});
    CHECK(st.consecutive() == 0);

    st.record(0, true);
    st.record(2, true);
    CHECK(st.counts() == std::vector<long>{0, 2, 0});  // correct never changes d
    CHECK(st.consecutive() == 2);

    st.record(1, false);
    CHECK(st.consecutive() == 0);
    CHECK(st.counts() == std::vector<long>{0, 3, 0});

    CHECK_THROWS_AS(st.record(3, true), IndexOutOfRange);
    CHECK_THROWS_AS(st.record(-1, true), IndexOutOfRange);
}

TEST_CASE("mastery needs an unbroken run of correct answers") {
    DifficultyState st(4);
    for (int i = 0; i < 499; ++i) st.record(i % 4, true);
    CHECK_FALSE(mastery_check(st, 500));
    st.record(0, false);
    CHECK(st.consecutive() == 0);
    for (int i = 0; i < 500; ++i) st.record(i % 4, true);
    CHECK(mastery_check(st, 500));

    DifficultyState quick(1);
    quick.record(0, true);
    CHECK(mastery_check(quick, 1));
}

TEST_CASE("the default curriculum orders basics before composites") {
    Curriculum c = default_curriculum();
    REQUIRE(c.entries.size() == 12);
    CHECK(c.entries[0].task == "S+S");
    CHECK(c.entries[0].kind == ModuleKind::Bsm);
    CHECK(c.entries[1].kind == ModuleKind::Bsm);
    CHECK(c.entries[2].kind == ModuleKind::Bsm);
    for (std::size_t i = 3; i < c.entries.size(); ++i)
        CHECK(c.entries[i].kind == ModuleKind::Ism);
    CHECK(c.entries.back().task == "EXPR");
}

TEST_CASE("curriculum files round trip") {
    TempDir tmp;
    Curriculum c = default_curriculum();
    c.entries[3].pool = 123;
    c.entries[3].budget = 4567;
    c.entries[4].min_digits = 2;
    c.entries[4].max_digits = 2;
    const std::string path = tmp.file("cur.txt");
    write_curriculum(path, c);
    Curriculum back = read_curriculum(path);
    REQUIRE(back.entries.size() == c.entries.size());
    for (std::size_t i = 0; i < c.entries.size(); ++i) {
        CHECK(back.entries[i].task == c.entries[i].task);
        CHECK(back.entries[i].kind == c.entries[i].kind);
        CHECK(back.entries[i].pool == c.entries[i].pool);
        CHECK(back.entries[i].budget == c.entries[i].budget);
        CHECK(back.entries[i].min_digits == c.entries[i].min_digits);
        CHECK(back.entries[i].max_digits == c.entries[i].max_digits);
    }
}

TEST_CASE("curriculum parsing reports the offending line") {
    TempDir tmp;
    const std::string path = tmp.file("bad.txt");
    {
        std::ofstream out(path);
        out << "# comment\n"
            << "S+S bsm\n"
            << "M+M blörp\n";
    }
    try {
        read_curriculum(path);
        FAIL("expected FormatError");
    } catch (const FormatError& e) {
        CHECK(e.line == 3);
    }
    {
        std::ofstream out(path);
        out << "S+S bsm epochs=abc\n";
    }
    CHECK_THROWS_AS(read_curriculum(path), FormatError);
}

TEST_CASE("task ids map to portable file names") {
    CHECK(task_filename("S+S") == "SpS");
    CHECK(task_filename("S-S") == "SmS");
    CHECK(task_filename("S*S") == "StS");
    CHECK(task_filename("M/M") == "MdM");
    CHECK(task_filename("EXPR") == "EXPR");
    CHECK(task_filename("EXPR+-*") == "EXPRpmt");
}

TEST_CASE("a one-entry bsm curriculum trains, freezes, and reloads") {
    TempDir tmp;
    Curriculum cur;
    cur.entries.push_back({"SS+", ModuleKind::Bsm});

    CurriculumOptions opt;
    opt.sub.hidden = 32;
    opt.sub.embed = 16;
    opt.sub.lr = 3e-3;
    opt.sub.seed = 9;
    opt.output_dir = tmp.file("run");
    std::filesystem::create_directories(opt.output_dir);

    Rng rng(9);
    CurriculumResult res = run_curriculum(cur, opt, rng);
    REQUIRE(res.completed);
    REQUIRE(res.logs.size() == 1);
    CHECK(res.logs[0].mastered);
    CHECK(res.logs[0].final_acc == 1.0);
    CHECK(res.registry.size() == 2);
    CHECK(res.registry.index_of("SS+") == 1);

    // the frozen registry reloads from disk and answers exactly
    SkillRegistry back = load_registry(opt.output_dir);
    REQUIRE(back.size() == 2);
    CHECK(back.by_name("SS+").invoke(tokenize("35")) == tokenize("8"));
    CHECK(back.by_name("SS+").invoke(tokenize("99")) == tokenize("18"));
}

TEST_CASE("an impossible ism budget fails the curriculum honestly") {
    TempDir tmp;
    Curriculum cur;
    CurriculumEntry e{"M+M", ModuleKind::Ism};
    e.budget = 64;  // two batches at n_c=32: hopeless by construction
    e.pool = 16;
    cur.entries.push_back(e);

    CurriculumOptions opt;
    opt.sub.hidden = 12;
    opt.sub.embed = 8;
    opt.sub.seed = 4;
    opt.rl.n_c = 32;
    opt.rl.fresh_eval = 4;
    opt.knobs.n_c = 32;
    opt.output_dir = tmp.file("run");
    std::filesystem::create_directories(opt.output_dir);

    Rng rng(4);
    CurriculumResult res = run_curriculum(cur, opt, rng);
    CHECK_FALSE(res.completed);
    CHECK(res.failed_task == "M+M");
    REQUIRE(res.logs.size() == 1);
    CHECK_FALSE(res.logs[0].mastered);
    CHECK(res.registry.size() == 1);  // nothing frozen
}
