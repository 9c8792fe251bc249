#include <doctest.h>

#include <cmath>
#include <sstream>

#include "seglab/field.hpp"
#include "seglab/pgm.hpp"
#include "seglab/rng.hpp"

using namespace seglab;

TEST_CASE("temperature softmax on symmetric logits") {
    LogitField z(1, 1, 3, {0.0, 0.0, 0.0});
    const ProbField p = temperature_softmax(z, 1.0);
    for (std::size_t k = 0; k < 3; ++k)
        CHECK(p.at(0, k) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("temperature softmax closed form at tau=10") {
    LogitField z(1, 1, 2, {1.0, 0.0});
    const ProbField p = temperature_softmax(z, 10.0);
    CHECK(std::abs(p.at(0, 0) - 0.9999546021312976) < 1e-15);
    CHECK(std::abs(p.at(0, 1) - 4.5397868702434395e-05) < 1e-19);
}

TEST_CASE("softmax rows stay on the simplex and strictly positive") {
    SplitMix64 rng(derive_stream(42, "field-simplex"));
    for (double tau : {0.5, 1.0, 10.0}) {
        std::vector<double> z(200 * 4);
        for (auto& v : z) v = 2.0 * rng.normal();
        const ProbField p = temperature_softmax(LogitField(1, 200, 4, z), tau);
        for (std::size_t i = 0; i < 200; ++i) {
            double sum = 0.0;
            for (std::size_t k = 0; k < 4; ++k) {
                CHECK(p.at(i, k) > 0.0);
                sum += p.at(i, k);
            }
            CHECK(std::abs(sum - 1.0) <= 1e-9);
        }
    }
}

TEST_CASE("max softmax component increases with tau, argmax invariant") {
    LogitField z(1, 1, 3, {0.4, 0.1, -0.2});
    double previous = 0.0;
    for (double tau = 0.5; tau <= 20.0; tau += 0.5) {
        const ProbField p = temperature_softmax(z, tau);
        std::size_t argmax = 0;
        for (std::size_t k = 1; k < 3; ++k)
            if (p.at(0, k) > p.at(0, argmax)) argmax = k;
        CHECK(argmax == 0);
        CHECK(p.at(0, 0) > previous);
        previous = p.at(0, 0);
    }
}

TEST_CASE("predicted marginal") {
    SUBCASE("uniform rows") {
        const ProbField p(1, 4, 2, {0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5});
        const Marginal m = predicted_marginal(p);
        CHECK(m[0] == 0.5);
        CHECK(m[1] == 0.5);
    }
    SUBCASE("hand-computed 4-pixel field") {
        const ProbField p(1, 4, 2, {0.9, 0.1, 0.8, 0.2, 0.1, 0.9, 0.2, 0.8});
        const Marginal m = predicted_marginal(p);
        CHECK(m[0] == doctest::Approx(0.5).epsilon(1e-15));
    }
}

TEST_CASE("one-hot marginal equals gt marginal exactly") {
    SplitMix64 rng(derive_stream(7, "field-onehot"));
    std::vector<int> labels(97);
    for (auto& v : labels) v = static_cast<int>(rng.below(3)) + 1;
    labels[0] = 1; labels[1] = 2; labels[2] = 3;
    const LabelField g(1, 97, 3, labels);
    const Marginal predicted = predicted_marginal(one_hot(g));
    const Marginal truth = gt_marginal(g);
    for (std::size_t k = 0; k < 3; ++k)
        CHECK(predicted[k] == truth[k]); // bitwise
}

TEST_CASE("gt marginal counting") {
    SUBCASE("single class everywhere") {
        const LabelField g(8, 8, 2, std::vector<int>(64, 1));
        const Marginal m = gt_marginal(g);
        CHECK(m[0] == 1.0);
        CHECK(m[1] == 0.0);
    }
    SUBCASE("half and half") {
        const LabelField g(1, 4, 2, {1, 1, 2, 2});
        CHECK(gt_marginal(g)[0] == 0.5);
    }
    SUBCASE("ten percent foreground") {
        std::vector<int> labels(2560, 2);
        for (std::size_t i = 0; i < 256; ++i) labels[i] = 1;
        const LabelField g(40, 64, 2, labels);
        CHECK(gt_marginal(g)[0] == 0.1);
        CHECK(gt_marginal(g)[1] == 0.9);
    }
}

TEST_CASE("field validation errors") {
    CHECK_THROWS_AS(temperature_softmax(LogitField(1, 1, 2, {0.0, 0.0}), 0.0),
                    invalid_parameter);
    CHECK_THROWS_AS(temperature_softmax(LogitField(1, 1, 2, {0.0, 0.0}), -1.0),
                    invalid_parameter);
    CHECK_THROWS_AS(LogitField(1, 1, 2, {1.0, std::nan("")}), invalid_input);
    CHECK_THROWS_AS(LogitField(1, 1, 2,
                               {1.0, std::numeric_limits<double>::infinity()}),
                    invalid_input);
    CHECK_THROWS_AS(LabelField(1, 2, 2, {1, 3}), invalid_input);
    CHECK_THROWS_AS(LabelField(1, 2, 2, {0, 1}), invalid_input);
    CHECK_THROWS_AS(LabelField(1, 2, 2, {1}), invalid_input);
    CHECK_THROWS_AS(ProbField(1, 1, 2, {0.6, 0.6}), invalid_input);
    CHECK_THROWS_AS(ProbField(1, 1, 2, {-0.1, 1.1}), invalid_input);
    CHECK_THROWS_AS(Marginal({0.5, 0.6}), invalid_input);
}

TEST_CASE("pgm round trip") {
    const LabelField g(2, 3, 3, {1, 2, 3, 3, 2, 1});
    std::stringstream buffer;
    write_pgm(buffer, g);
    const LabelField back = read_pgm(buffer);
    CHECK(back.height() == 2);
    CHECK(back.width() == 3);
    CHECK(back.num_classes() == 3);
    for (std::size_t i = 0; i < 6; ++i) CHECK(back.at(i) == g.at(i));
}

TEST_CASE("pgm reader accepts comments and rejects junk") {
    {
        std::stringstream ok("P2\n# a comment\n2 1\n2\n1 2\n");
        const LabelField g = read_pgm(ok);
        CHECK(g.width() == 2);
    }
    {
        std::stringstream bad_magic("P5\n2 1\n2\n1 2\n");
        CHECK_THROWS_AS(read_pgm(bad_magic), invalid_input);
    }
    {
        std::stringstream truncated("P2\n2 2\n2\n1 2 1\n");
        CHECK_THROWS_AS(read_pgm(truncated), invalid_input);
    }
    {
        std::stringstream out_of_range("P2\n2 1\n2\n1 3\n");
        CHECK_THROWS_AS(read_pgm(out_of_range), invalid_input);
    }
}
