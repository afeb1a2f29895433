#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "helpers.hpp"
#include "skillcalc/substrate/gradcheck.hpp"
#include "skillcalc/substrate/layers.hpp"
#include "skillcalc/substrate/param_store.hpp"
#include "skillcalc/substrate/tape.hpp"

using namespace skillcalc;
using testutil::TempDir;
using testutil::slurp;

namespace {

ParamStore make_store(int hidden, int embed, std::uint64_t seed) {
    ParamStore ps;
    ps.config.hidden = hidden;
    ps.config.embed = embed;
    ps.config.seed = seed;
    return ps;
}

VectorXd random_vec(int n, Rng& rng) {
    VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = rng.uniform(-1.0, 1.0);
    return v;
}

}  // namespace

TEST_CASE("positional encoding starts with sin zero and cos one") {
    VectorXd pe0 = positional_encoding(0, 8);
    for (int i = 0; i < 8; i += 2) {
        CHECK(pe0(i) == 0.0);      // sin(0)
        CHECK(pe0(i + 1) == 1.0);  // cos(0)
    }
    VectorXd pe5 = positional_encoding(5, 8);
    CHECK((pe0 - pe5).norm() > 1e-3);
    for (int i = 0; i < 8; ++i) {
        CHECK(pe5(i) <= 1.0);
        CHECK(pe5(i) >= -1.0);
    }
}

TEST_CASE("token embedding distinguishes positions only when asked") {
    ParamStore ps = make_store(8, 6, 1);
    Rng rng(ps.config.seed);
    ensure_embedding(ps, "emb", 6, kNumTokens, rng);
    EvalBackend b(ps);
    TokenSeq seq{3, 3};

    auto with_pos = embed(b, ps, "emb", seq, true);
    CHECK((b.value(with_pos[0]) - b.value(with_pos[1])).norm() > 1e-6);

    auto without = embed(b, ps, "emb", seq, false);
    CHECK((b.value(without[0]) - b.value(without[1])).norm() == 0.0);
    CHECK(b.value(without[0]) == ps.at("emb").col(3));
}

TEST_CASE("gru with zero weights halves the hidden state") {
    ParamStore ps = make_store(4, 3, 2);
    Rng rng(2);
    ensure_gru(ps, "g", 3, 4, rng);
    for (const auto& [name, m] : ps.params()) ps.mutable_at(name).setZero();
    EvalBackend b(ps);
    VectorXd h0(4);
    h0 << 0.8, -0.2, 0.4, -1.0;
    auto h1 = gru_step(b, ps, "g", b.input(random_vec(3, rng)), b.input(h0));
    CHECK((b.value(h1) - 0.5 * h0).norm() < 1e-15);
}

TEST_CASE("gru keeps the hidden state bounded") {
    ParamStore ps = make_store(6, 5, 3);
    Rng rng(3);
    ensure_gru(ps, "g", 5, 6, rng);
    EvalBackend b(ps);
    auto h = b.input(VectorXd::Zero(6));
    for (int t = 0; t < 50; ++t) {
        h = gru_step(b, ps, "g", b.input(10.0 * random_vec(5, rng)), h);
        for (int i = 0; i < 6; ++i) {
            CHECK(b.value(h)(i) < 1.0);
            CHECK(b.value(h)(i) > -1.0);
        }
    }
}

TEST_CASE("birnn on a single element concatenates both directions") {
    ParamStore ps = make_store(5, 4, 4);
    Rng rng(4);
    ensure_birnn(ps, "enc", 4, 5, rng);
    EvalBackend b(ps);
    VectorXd x = random_vec(4, rng);
    auto outs = birnn_encode(b, ps, "enc", {b.input(x)});
    REQUIRE(outs.size() == 1);
    REQUIRE(b.value(outs[0]).size() == 10);

    auto fwd = gru_step(b, ps, "enc.fwd", b.input(x), b.input(VectorXd::Zero(5)));
    auto bwd = gru_step(b, ps, "enc.bwd", b.input(x), b.input(VectorXd::Zero(5)));
    CHECK((b.value(outs[0]).head(5) - b.value(fwd)).norm() == 0.0);
    CHECK((b.value(outs[0]).tail(5) - b.value(bwd)).norm() == 0.0);

    CHECK_THROWS_AS(birnn_encode(b, ps, "enc", {}), EmptySequence);
}

TEST_CASE("birnn with swapped directions mirrors a reversed sequence") {
    const int h = 5, d = 4;
    ParamStore a = make_store(h, d, 5);
    Rng rng(5);
    ensure_birnn(a, "enc", d, h, rng);
    ParamStore c = make_store(h, d, 5);
    Rng rng2(6);
    ensure_birnn(c, "enc", d, h, rng2);
    for (const char* part : {"W_ir", "W_hr", "b_ir", "b_hr", "W_iz", "W_hz", "b_iz", "b_hz",
                             "W_in", "W_hn", "b_in", "b_hn"}) {
        c.mutable_at(std::string("enc.fwd.") + part) = a.at(std::string("enc.bwd.") + part);
        c.mutable_at(std::string("enc.bwd.") + part) = a.at(std::string("enc.fwd.") + part);
    }
    std::vector<VectorXd> xs;
    for (int k = 0; k < 6; ++k) xs.push_back(random_vec(d, rng));

    EvalBackend ba(a), bc(c);
    std::vector<EvalBackend::Vec> ins_a, ins_c;
    for (int k = 0; k < 6; ++k) ins_a.push_back(ba.input(xs[k]));
    for (int k = 5; k >= 0; --k) ins_c.push_back(bc.input(xs[k]));
    auto oa = birnn_encode(ba, a, "enc", ins_a);
    auto oc = birnn_encode(bc, c, "enc", ins_c);
    for (int k = 0; k < 6; ++k) {
        const VectorXd& u = ba.value(oa[k]);
        const VectorXd& v = bc.value(oc[5 - k]);
        CHECK((u.head(h) - v.tail(h)).norm() < 1e-14);
        CHECK((u.tail(h) - v.head(h)).norm() < 1e-14);
    }
}

TEST_CASE("softmax heads normalize and default to uniform") {
    ParamStore ps = make_store(6, 4, 7);
    Rng rng(7);
    ensure_linear(ps, "head", 6, 5, rng);
    ps.mutable_at("head.W").setZero();
    ps.mutable_at("head.b").setZero();
    EvalBackend b(ps);
    auto p = softmax_head(b, ps, "head", b.input(random_vec(6, rng)), 5);
    for (int i = 0; i < 5; ++i) CHECK(b.value(p)(i) == Catch::Approx(0.2).margin(1e-12));

    Rng rng2(8);
    ensure_linear(ps, "head2", 6, 5, rng2);
    auto q = softmax_head(b, ps, "head2", b.input(random_vec(6, rng2)), 5);
    CHECK(std::abs(b.value(q).sum() - 1.0) < 1e-12);
    for (int i = 0; i < 5; ++i) CHECK(b.value(q)(i) > 0.0);
    CHECK_THROWS_AS(softmax_head(b, ps, "head2", b.input(random_vec(6, rng2)), 7), ShapeMismatch);
}

TEST_CASE("softmax is invariant to a constant logit shift") {
    ParamStore ps = make_store(4, 4, 9);
    EvalBackend b(ps);
    VectorXd logits(4);
    logits << 0.3, -1.2, 2.0, 0.0;
    auto p1 = b.softmax(b.input(logits));
    auto p2 = b.softmax(b.input(logits.array() + 1000.0));
    CHECK((b.value(p1) - b.value(p2)).norm() < 1e-12);
}

TEST_CASE("pointer attention over identical keys is uniform") {
    ParamStore ps = make_store(6, 4, 10);
    Rng rng(10);
    ensure_attention(ps, "ptr", 8, 6, 6, rng);
    EvalBackend b(ps);
    VectorXd key = random_vec(8, rng);
    std::vector<EvalBackend::Vec> keys;
    for (int i = 0; i < 4; ++i) keys.push_back(b.input(key));
    auto p = pointer_attention(b, ps, "ptr", b.input(random_vec(6, rng)), keys);
    for (int i = 0; i < 4; ++i) CHECK(b.value(p)(i) == Catch::Approx(0.25).margin(1e-12));

    auto single = pointer_attention(b, ps, "ptr", b.input(random_vec(6, rng)), {b.input(key)});
    REQUIRE(b.value(single).size() == 1);
    CHECK(b.value(single)(0) == Catch::Approx(1.0).margin(1e-15));
}

TEST_CASE("tape and eager backends agree") {
    ParamStore ps = make_store(6, 5, 11);
    Rng rng(11);
    ensure_gru(ps, "g", 5, 6, rng);
    ensure_linear(ps, "out", 6, 3, rng);
    VectorXd x = random_vec(5, rng), h0 = random_vec(6, rng) * 0.5;

    EvalBackend eb(ps);
    auto eh = gru_step(eb, ps, "g", eb.input(x), eb.input(h0));
    auto ep = softmax_head(eb, ps, "out", eh, 3);

    Tape tp(ps);
    auto th = gru_step(tp, ps, "g", tp.input(x), tp.input(h0));
    auto tpv = softmax_head(tp, ps, "out", th, 3);

    CHECK((eb.value(ep) - tp.value(tpv)).norm() < 1e-15);
}

TEST_CASE("backward on an unused parameter leaves a zero gradient") {
    ParamStore ps = make_store(4, 4, 12);
    Rng rng(12);
    ensure_linear(ps, "used", 4, 4, rng);
    ensure_linear(ps, "unused", 4, 4, rng);
    Tape tp(ps);
    auto y = linear(tp, ps, "used", tp.input(random_vec(4, rng)));
    tp.backward(tp.sum(y));
    CHECK(ps.grad("used.W").norm() > 0.0);
    CHECK(ps.grad("unused.W").norm() == 0.0);
}

TEST_CASE("adam leaves parameters alone when gradients are zero") {
    ParamStore ps = make_store(4, 4, 13);
    Rng rng(13);
    ensure_linear(ps, "L", 4, 4, rng);
    MatrixXd before = ps.at("L.W");
    ps.zero_grads();
    ps.adam_step();
    CHECK((ps.at("L.W") - before).norm() == 0.0);
}

TEST_CASE("adam shrinks a scalar quadratic") {
    ParamStore ps;
    ps.config.lr = 0.1;
    ps.add_zeros("w", 1, 1);
    ps.mutable_at("w")(0, 0) = 1.0;
    double prev = 1.0;
    for (int step = 0; step < 20; ++step) {
        ps.zero_grads();
        ps.grad("w")(0, 0) = 2.0 * ps.at("w")(0, 0);  // d/dw w^2
        ps.adam_step();
        const double w = ps.at("w")(0, 0);
        // monotone while far from the optimum; the normalized step may
        // overshoot zero near it
        if (step < 5) CHECK(w < prev);
        prev = w;
    }
    CHECK(std::abs(prev) < 0.5);
}

TEST_CASE("checkpoints round trip bit for bit") {
    TempDir tmp;
    ParamStore ps = make_store(7, 5, 14);
    Rng rng(14);
    ensure_gru(ps, "g", 5, 7, rng);
    ensure_linear(ps, "out", 7, 3, rng);
    ps.tag = "unit";
    ps.meta["l_io"] = 3;
    ps.rng_state = rng.serialize();
    // take one optimizer step so the moment tensors are exercised too
    ps.zero_grads();
    ps.grad("out.W").setConstant(0.01);
    ps.adam_step();

    const std::string p1 = tmp.file("a.ckpt"), p2 = tmp.file("b.ckpt");
    ps.save(p1);
    ParamStore back = ParamStore::load(p1);
    back.save(p2);
    CHECK(slurp(p1) == slurp(p2));
    CHECK(back.tag == "unit");
    CHECK(back.meta.at("l_io") == 3);
    CHECK(back.step_count() == 1);
    CHECK(back.config.hidden == 7);

    // loaded parameters drive an identical forward pass
    EvalBackend b1(ps), b2(back);
    VectorXd x = random_vec(5, rng), h0 = VectorXd::Zero(7);
    auto y1 = gru_step(b1, ps, "g", b1.input(x), b1.input(h0));
    auto y2 = gru_step(b2, back, "g", b2.input(x), b2.input(h0));
    CHECK((b1.value(y1) - b2.value(y2)).norm() == 0.0);
}

TEST_CASE("corrupt checkpoints are rejected") {
    TempDir tmp;
    ParamStore ps = make_store(3, 3, 15);
    Rng rng(15);
    ensure_linear(ps, "L", 3, 3, rng);
    const std::string good = tmp.file("good.ckpt");
    ps.save(good);

    std::string bytes = slurp(good);
    {
        std::string bad = bytes;
        bad[0] = 'X';  // magic
        std::ofstream out(tmp.file("bad1.ckpt"), std::ios::binary);
        out << bad;
    }
    CHECK_THROWS_AS(ParamStore::load(tmp.file("bad1.ckpt")), CheckpointVersionMismatch);
    {
        std::string bad = bytes;
        bad[8] = static_cast<char>(99);  // version field
        std::ofstream out(tmp.file("bad2.ckpt"), std::ios::binary);
        out << bad;
    }
    CHECK_THROWS_AS(ParamStore::load(tmp.file("bad2.ckpt")), CheckpointVersionMismatch);
    {
        std::ofstream out(tmp.file("trunc.ckpt"), std::ios::binary);
        out << bytes.substr(0, bytes.size() / 2);
    }
    CHECK_THROWS_AS(ParamStore::load(tmp.file("trunc.ckpt")), IoError);
    CHECK_THROWS_AS(ParamStore::load(tmp.file("missing.ckpt")), IoError);
}

TEST_CASE("finite difference gradcheck passes for every layer") {
    auto report = run_gradcheck_battery(7);
    REQUIRE(report.size() >= 6);
    for (const auto& [name, err] : report) {
        INFO(name);
        CHECK(err < 1e-4);
    }
}

TEST_CASE("gradcheck catches a wrong gradient") {
    ParamStore ps = make_store(3, 3, 16);
    Rng rng(16);
    ensure_linear(ps, "L", 3, 3, rng);
    auto res = gradcheck(ps, [&](auto& b) {
        auto y = linear(b, ps, "L", b.input(VectorXd::Ones(3)));
        auto frozen = b.input(b.value(y));  // constant copy: half the gradient path is cut
        return b.sum(b.mul(y, frozen));
    });
    CHECK(res.max_rel_err > 1e-3);
}
