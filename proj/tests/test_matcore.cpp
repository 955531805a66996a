#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "matstein/matcore.hpp"
#include "matstein/rng.hpp"
#include "test_util.hpp"

using namespace matstein;

TEST_CASE("sympd construction and spectral cache") {
    const SymPD s = random_sympd(4, 11);
    CHECK(s.dim() == 4);
    // descending eigenvalues
    for (int i = 1; i < 4; ++i) CHECK(s.eigenvalues()[i] <= s.eigenvalues()[i - 1]);
    const Matrix recon =
        s.eigenvectors() * s.eigenvalues().asDiagonal() * s.eigenvectors().transpose();
    CHECK((recon - s.mat()).norm() <= 1e-10 * s.mat().norm());

    SUBCASE("asymmetric input rejected") {
        Matrix bad = s.mat();
        bad(0, 1) += 1e-6;
        CHECK_THROWS_AS(SymPD{bad}, ValidationError);
    }
    SUBCASE("indefinite input rejected") {
        Matrix bad = Matrix::Identity(3, 3);
        bad(2, 2) = -1.0;
        CHECK_THROWS_AS(SymPD{bad}, NumericalError);
    }
    SUBCASE("near-singular input rejected") {
        Matrix bad = Matrix::Identity(3, 3);
        bad(2, 2) = 1e-13;
        CHECK_THROWS_AS(SymPD{bad}, NumericalError);
    }
}

TEST_CASE("eigendecomposition round trip at high condition number") {
    const SymPD s = random_sympd(5, 23, 1e-8, 1.0);  // condition number 1e8
    const Matrix recon =
        s.eigenvectors() * s.eigenvalues().asDiagonal() * s.eigenvectors().transpose();
    CHECK((recon - s.mat()).norm() <= 1e-10 * s.mat().norm());
}

TEST_CASE("sym_sqrt") {
    SUBCASE("identity") {
        const SymPD r = sym_sqrt(SymPD(Matrix::Identity(3, 3)));
        CHECK((r.mat() - Matrix::Identity(3, 3)).norm() <= 1e-14);
    }
    SUBCASE("diagonal") {
        Matrix d = Matrix::Zero(2, 2);
        d(0, 0) = 4.0;
        d(1, 1) = 9.0;
        const SymPD r = sym_sqrt(SymPD(d));
        CHECK(r.mat()(0, 0) == doctest::Approx(2.0).epsilon(1e-12));
        CHECK(r.mat()(1, 1) == doctest::Approx(3.0).epsilon(1e-12));
        CHECK(std::abs(r.mat()(0, 1)) <= 1e-14);
    }
    SUBCASE("re-multiplication oracle") {
        const SymPD s = random_sympd(5, 37, 0.1, 10.0);
        const SymPD r = sym_sqrt(s);
        CHECK((r.mat() * r.mat() - s.mat()).norm() <= 1e-10 * s.mat().norm());
    }
}

TEST_CASE("kron") {
    SUBCASE("identities") {
        const SymPD k = kron(SymPD(Matrix::Identity(2, 2)), SymPD(Matrix::Identity(3, 3)));
        CHECK((k.mat() - Matrix::Identity(6, 6)).norm() <= 1e-14);
    }
    SUBCASE("diagonal product") {
        Matrix a = Matrix::Zero(2, 2), b = Matrix::Zero(2, 2);
        a.diagonal() << 1.0, 2.0;
        b.diagonal() << 3.0, 4.0;
        const SymPD k = kron(SymPD(a), SymPD(b));
        Vector expect(4);
        expect << 3.0, 4.0, 6.0, 8.0;
        Vector diag = k.mat().diagonal();
        CHECK((diag - expect).norm() <= 1e-14);
    }
    SUBCASE("eigenvalue product oracle") {
        const SymPD a = random_sympd(3, 5);
        const SymPD b = random_sympd(4, 7);
        const SymPD k = kron(a, b);
        std::vector<double> products;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 4; ++j) products.push_back(a.eigenvalues()[i] * b.eigenvalues()[j]);
        std::sort(products.begin(), products.end(), std::greater<>());
        for (int i = 0; i < 12; ++i)
            CHECK(k.eigenvalues()[i] == doctest::Approx(products[i]).epsilon(1e-10));
    }
    SUBCASE("dimension cap") {
        CHECK_THROWS_AS(kron(random_sympd(9, 1), random_sympd(8, 2)), ValidationError);
        CHECK_NOTHROW(kron(random_sympd(9, 1), random_sympd(8, 2), 128));
    }
    SUBCASE("mixed product with sym_sqrt") {
        const SymPD a = random_sympd(2, 13);
        const SymPD b = random_sympd(3, 17);
        const Matrix lhs = sym_sqrt(kron(a, b)).mat();
        const Matrix rhs = kron_dense(sym_sqrt(a).mat(), sym_sqrt(b).mat());
        CHECK((lhs - rhs).norm() <= 1e-9 * lhs.norm());
    }
}

TEST_CASE("norms") {
    SUBCASE("zero matrix") {
        const MatrixNorms n = norms(Matrix::Zero(3, 2));
        CHECK(n.frobenius == 0.0);
        CHECK(n.spectral == 0.0);
    }
    SUBCASE("identity") {
        const MatrixNorms n = norms(Matrix::Identity(2, 2));
        CHECK(n.frobenius == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
        CHECK(n.spectral == doctest::Approx(1.0).epsilon(1e-14));
    }
    SUBCASE("rank one") {
        Vector u = testutil::seeded_matrix(4, 1, 3).col(0);
        Vector v = testutil::seeded_matrix(3, 1, 4).col(0);
        u /= u.norm();
        v /= v.norm();
        const MatrixNorms n = norms(u * v.transpose());
        CHECK(n.frobenius == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(n.spectral == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("spectral below frobenius and submultiplicative sandwich") {
        for (int t = 0; t < 100; ++t) {
            const Matrix a = testutil::seeded_matrix(3, 3, 100 + t);
            const Matrix b = testutil::seeded_matrix(3, 4, 200 + t);
            const Matrix c = testutil::seeded_matrix(4, 4, 300 + t);
            const MatrixNorms na = norms(a), nb = norms(b), nc = norms(c);
            CHECK(na.spectral <= na.frobenius + 1e-12);
            CHECK(norms(a * b * c).frobenius <=
                  na.spectral * nb.frobenius * nc.spectral * (1.0 + 1e-12));
        }
    }
}

TEST_CASE("vec_t round trip") {
    for (int t = 0; t < 10; ++t) {
        const Matrix x = testutil::seeded_matrix(3, 4, 500 + t);
        CHECK((unvec_t(vec_t(x), 3, 4) - x).norm() == 0.0);
    }
    // vec(X^T) stacks rows
    Matrix x(2, 2);
    x << 1, 2, 3, 4;
    const Vector v = vec_t(x);
    CHECK(v[0] == 1);
    CHECK(v[1] == 2);
    CHECK(v[2] == 3);
    CHECK(v[3] == 4);
}
