#include <catch2/catch_amalgamated.hpp>

#include "skillcalc/expr.hpp"
#include "skillcalc/rng.hpp"
#include "skillcalc/tokens.hpp"

using namespace skillcalc;

TEST_CASE("tokenize maps characters to alphabet ids") {
    CHECK(tokenize("12+3") == TokenSeq{1, 2, 10, 3});
    CHECK(tokenize("(7*8)") == TokenSeq{14, 7, 12, 8, 15});
    CHECK(tokenize("0-9/4") == TokenSeq{0, 11, 9, 13, 4});
    CHECK_THROWS_AS(tokenize(""), EmptySequence);
}

TEST_CASE("tokenize accepts the multiplication and division glyph aliases") {
    CHECK(tokenize("7×8") == tokenize("7*8"));   // U+00D7
    CHECK(tokenize("8÷2") == tokenize("8/2"));   // U+00F7
    CHECK(tokenize("3·4") == TokenSeq{3, kBlank, 4});  // U+00B7 is the blank glyph
    CHECK_THROWS_AS(tokenize("9−5"), UnknownCharacter);  // U+2212 is not aliased
}

TEST_CASE("tokenize reports the offending position") {
    try {
        tokenize("12a3");
        FAIL("expected UnknownCharacter");
    } catch (const UnknownCharacter& e) {
        CHECK(e.position == 2);
    }
    CHECK_THROWS_AS(tokenize("1 2"), UnknownCharacter);
}

TEST_CASE("detokenize inverts tokenize on the ascii alphabet") {
    for (const char* s : {"12+3", "(7*8)", "0", "((1))", "9/3-2*4"}) {
        CHECK(detokenize(tokenize(s)) == s);
    }
    CHECK(detokenize(TokenSeq{kBlank}) == "·");
    CHECK(pretty(TokenSeq{1, 12, 2}) == "1×2");
}

TEST_CASE("parse honours operator precedence") {
    AstPtr a = parse("2+3*4");
    REQUIRE(a->op == kPlus);
    CHECK(a->left->kind == ExprAst::Kind::Literal);
    CHECK(a->left->value == 2);
    REQUIRE(a->right->op == kTimes);
    CHECK(a->right->left->value == 3);
    CHECK(a->right->right->value == 4);

    AstPtr b = parse("(2+3)*4");
    REQUIRE(b->op == kTimes);
    REQUIRE(b->left->op == kPlus);
    CHECK(b->left->left->value == 2);
    CHECK(b->left->right->value == 3);
    CHECK(b->right->value == 4);
}

TEST_CASE("parse is left-associative within a precedence level") {
    AstPtr a = parse("8-3-2");
    REQUIRE(a->op == kMinus);
    REQUIRE(a->left->op == kMinus);
    CHECK(a->right->value == 2);
    CHECK(evaluate(*a) == 3);

    AstPtr b = parse("24/4/2");
    REQUIRE(b->op == kDivide);
    REQUIRE(b->left->op == kDivide);
    CHECK(evaluate(*b) == 3);
}

TEST_CASE("parse rejects malformed input with a position") {
    try {
        parse("2++3");
        FAIL("expected SyntaxError");
    } catch (const SyntaxError& e) {
        CHECK(e.position == 2);
    }
    CHECK_THROWS_AS(parse(""), EmptySequence);
    CHECK_THROWS_AS(parse("(2+3"), SyntaxError);
    CHECK_THROWS_AS(parse("2+3)"), SyntaxError);
    CHECK_THROWS_AS(parse(")2("), SyntaxError);
    CHECK_THROWS_AS(parse("2+"), SyntaxError);
    CHECK_THROWS_AS(parse("()"), SyntaxError);
    CHECK_THROWS_AS(parse("-2"), SyntaxError);  // no unary minus in the grammar
}

TEST_CASE("evaluate computes exact integer results") {
    CHECK(evaluate(*parse("2+3*4")) == 14);
    CHECK(evaluate(*parse("84/7")) == 12);
    CHECK(evaluate(*parse("(10-4)/3")) == 2);
    CHECK(evaluate(*parse("2-5")) == -3);
    CHECK(render(evaluate(*parse("2-5"))) == "-3");
    CHECK(render_tokens(evaluate(*parse("2-5"))) == TokenSeq{11, 3});
    CHECK(render_tokens(evaluate(*parse("5+5"))) == TokenSeq{1, 0});
}

TEST_CASE("evaluate handles values beyond 64 bits") {
    // 999999999^3, checked against an independently computed constant
    AstPtr a = parse("999999999*999999999*999999999");
    CHECK(render(evaluate(*a)) == "999999997000000002999999999");
}

TEST_CASE("division errors are distinguished") {
    CHECK_THROWS_AS(evaluate(*parse("7/0")), DivisionByZero);
    CHECK_THROWS_AS(evaluate(*parse("7/2")), InexactDivision);
    CHECK_THROWS_AS(evaluate(*parse("5/(3-3)")), DivisionByZero);
    CHECK(evaluate(*parse("0/5")) == 0);
}

TEST_CASE("serialize emits minimal parentheses") {
    auto round = [](const char* s) { return serialize(*parse(s)); };
    CHECK(round("2+3*4") == "2+3*4");
    CHECK(round("(2+3)*4") == "(2+3)*4");
    CHECK(round("((2))+3") == "2+3");
    CHECK(round("2-(3-4)") == "2-(3-4)");
    CHECK(round("(2-3)-4") == "2-3-4");
    CHECK(round("8/(4/2)") == "8/(4/2)");
    CHECK(round("(8/4)/2") == "8/4/2");
    CHECK(round("2*(3+4)") == "2*(3+4)");
    CHECK(round("2*3+4") == "2*3+4");
    CHECK(round("12*(3/3)") == "12*(3/3)");
    CHECK(round("2+(3+4)") == "2+(3+4)");  // tree-preserving under left association
}

TEST_CASE("serialize then parse is the identity on the tree") {
    Rng rng(404);
    for (int i = 0; i < 200; ++i) {
        // random flat expression without division (always evaluable)
        std::string s = std::to_string(rng.below(100));
        const char ops[] = {'+', '-', '*'};
        const int n_ops = static_cast<int>(rng.below(5)) + 1;
        for (int k = 0; k < n_ops; ++k) {
            s += ops[rng.below(3)];
            s += std::to_string(rng.below(100));
        }
        AstPtr a = parse(s);
        const std::string ser = serialize(*a);
        CHECK(ser == s);
        CHECK(evaluate(*parse(ser)) == evaluate(*a));
    }
}

TEST_CASE("the independent evaluator agrees on fixed cases") {
    CHECK(evaluate_independent(tokenize("(10-4)/3")) == 2);
    CHECK(evaluate_independent(tokenize("2+3*4")) == 14);
    CHECK(evaluate_independent(tokenize("(2+3)*4")) == 20);
    CHECK(evaluate_independent(tokenize("8-3-2")) == 3);
    CHECK(evaluate_independent(tokenize("24/4/2")) == 3);
    CHECK(evaluate_independent(tokenize("7")) == 7);
    CHECK_THROWS_AS(evaluate_independent(tokenize("7/2")), InexactDivision);
    CHECK_THROWS_AS(evaluate_independent(tokenize("7/0")), DivisionByZero);
    CHECK_THROWS_AS(evaluate_independent(tokenize("2++3")), SyntaxError);
    CHECK_THROWS_AS(evaluate_independent(TokenSeq{}), SyntaxError);
}

TEST_CASE("recursive and stack evaluators agree on random expressions") {
    Rng rng(505);
    int evaluated = 0;
    for (int i = 0; i < 2000; ++i) {
        std::string s = std::to_string(rng.below(50));
        const char ops[] = {'+', '-', '*', '/'};
        const int n_ops = static_cast<int>(rng.below(4)) + 1;
        for (int k = 0; k < n_ops; ++k) {
            s += ops[rng.below(4)];
            s += std::to_string(rng.below(50));
        }
        if (rng.chance(0.3)) s = "(" + s + ")";
        TokenSeq toks = tokenize(s);
        BigInt a, b;
        bool ok_a = true, ok_b = true;
        try {
            a = evaluate(*parse(toks));
        } catch (const DivisionByZero&) {
            ok_a = false;
        } catch (const InexactDivision&) {
            ok_a = false;
        }
        try {
            b = evaluate_independent(toks);
        } catch (const DivisionByZero&) {
            ok_b = false;
        } catch (const InexactDivision&) {
            ok_b = false;
        }
        REQUIRE(ok_a == ok_b);
        if (ok_a) {
            CHECK(a == b);
            ++evaluated;
        }
    }
    CHECK(evaluated > 200);  // the division-free mass keeps this well populated
}
