#include "sforge/numeric.hpp"

#include <algorithm>
#include <cstdlib>
#include <sstream>
#include <stdexcept>
#include <string>

#include "sforge/errors.hpp"

namespace sforge {

Rational parse_rational(std::string_view text) {
    std::string s(text);
    s.erase(std::remove_if(s.begin(), s.end(), [](char c) { return c == ' '; }), s.end());
    if (s.empty()) throw ParseError("empty rational literal");
    auto dot = s.find('.');
    auto exp = s.find_first_of("eE");
    if (dot != std::string::npos || exp != std::string::npos) {
        // Decimal literal, converted exactly (1e7, 0.25, 2.5e-3).
        std::string mant = exp == std::string::npos ? s : s.substr(0, exp);
        long e10 = exp == std::string::npos ? 0 : std::stol(s.substr(exp + 1));
        bool neg = !mant.empty() && mant[0] == '-';
        if (!mant.empty() && (mant[0] == '-' || mant[0] == '+')) mant.erase(0, 1);
        auto d = mant.find('.');
        std::string digits = mant;
        if (d != std::string::npos) {
            e10 -= static_cast<long>(mant.size() - d - 1);
            digits = mant.substr(0, d) + mant.substr(d + 1);
        }
        if (digits.empty() || digits.find_first_not_of("0123456789") != std::string::npos)
            throw ParseError("bad rational literal: " + s);
        Rational q{BigInt(digits, 10)};
        q *= pow(Rational(10), e10);
        if (neg) q = -q;
        return q;
    }
    Rational q;
    if (q.set_str(s, 10) != 0) throw ParseError("bad rational literal: " + s);
    if (q.get_den() == 0) throw ParseError("zero denominator: " + s);
    q.canonicalize();
    return q;
}

std::string to_string(const Rational& q) { return q.get_str(10); }
std::string to_string(const BigInt& z) { return z.get_str(10); }

BigInt pow(const BigInt& z, unsigned long e) {
    BigInt r;
    mpz_pow_ui(r.get_mpz_t(), z.get_mpz_t(), e);
    return r;
}

Rational ratio(const BigInt& num, const BigInt& den) {
    Rational q(num, den);
    q.canonicalize();
    return q;
}

Rational pow(const Rational& q, long e) {
    if (e < 0) {
        if (q == 0) throw std::domain_error("zero to a negative power");
        Rational inv = 1 / q;
        return pow(inv, -e);
    }
    Rational r(pow(BigInt(q.get_num()), static_cast<unsigned long>(e)),
               pow(BigInt(q.get_den()), static_cast<unsigned long>(e)));
    r.canonicalize();
    return r;
}

BigInt binomial(long n, long k) {
    if (k < 0 || n < 0 || k > n) return 0;
    BigInt r;
    mpz_bin_uiui(r.get_mpz_t(), static_cast<unsigned long>(n), static_cast<unsigned long>(k));
    return r;
}

BigInt factorial(long n) {
    if (n < 0) throw std::domain_error("negative factorial");
    BigInt r;
    mpz_fac_ui(r.get_mpz_t(), static_cast<unsigned long>(n));
    return r;
}

std::optional<long> exact_log2(const Rational& q) {
    if (q <= 0) return std::nullopt;
    const BigInt num = q.get_num(), den = q.get_den();
    auto log2_of_power = [](const BigInt& z) -> std::optional<long> {
        if (mpz_popcount(z.get_mpz_t()) != 1) return std::nullopt;
        return static_cast<long>(mpz_scan1(z.get_mpz_t(), 0));
    };
    auto a = log2_of_power(num), b = log2_of_power(den);
    if (!a || !b) return std::nullopt;
    return *a - *b;
}

namespace {

void set_q(mpfr_t x, const Rational& q, mpfr_rnd_t rnd) { mpfr_set_q(x, q.get_mpq_t(), rnd); }

}  // namespace

Real::Real() {
    mpfr_init2(lo_, kRealPrecision);
    mpfr_init2(hi_, kRealPrecision);
    set_exact(Rational(0));
}

Real::Real(const Rational& q) : Real() { set_exact(q); }
Real::Real(long v) : Real() { set_exact(Rational(v)); }

Real::Real(const Real& other) : exact_(other.exact_) {
    mpfr_init2(lo_, kRealPrecision);
    mpfr_init2(hi_, kRealPrecision);
    mpfr_set(lo_, other.lo_, MPFR_RNDD);
    mpfr_set(hi_, other.hi_, MPFR_RNDU);
}

Real::Real(Real&& other) noexcept : Real(static_cast<const Real&>(other)) {}

Real& Real::operator=(const Real& other) {
    if (this != &other) {
        mpfr_set(lo_, other.lo_, MPFR_RNDD);
        mpfr_set(hi_, other.hi_, MPFR_RNDU);
        exact_ = other.exact_;
    }
    return *this;
}

Real& Real::operator=(Real&& other) noexcept { return *this = static_cast<const Real&>(other); }

Real::~Real() {
    mpfr_clear(lo_);
    mpfr_clear(hi_);
}

void Real::set_exact(const Rational& q) {
    exact_ = q;
    set_q(lo_, q, MPFR_RNDD);
    set_q(hi_, q, MPFR_RNDU);
}

Real Real::log2(const Rational& q) {
    if (q <= 0) throw std::domain_error("log2 of a non-positive number");
    if (auto e = exact_log2(q)) return Real(Rational(*e));
    Real r;
    r.exact_.reset();
    mpfr_t x;
    mpfr_init2(x, kRealPrecision);
    set_q(x, q, MPFR_RNDD);
    mpfr_log2(r.lo_, x, MPFR_RNDD);
    set_q(x, q, MPFR_RNDU);
    mpfr_log2(r.hi_, x, MPFR_RNDU);
    mpfr_clear(x);
    return r;
}

Real Real::ln(const Rational& q) {
    if (q <= 0) throw std::domain_error("log of a non-positive number");
    if (q == 1) return Real(0L);
    Real r;
    r.exact_.reset();
    mpfr_t x;
    mpfr_init2(x, kRealPrecision);
    set_q(x, q, MPFR_RNDD);
    mpfr_log(r.lo_, x, MPFR_RNDD);
    set_q(x, q, MPFR_RNDU);
    mpfr_log(r.hi_, x, MPFR_RNDU);
    mpfr_clear(x);
    return r;
}

Real Real::rpow(const Rational& q, const Rational& e) {
    if (q <= 0) throw std::domain_error("fractional power of a non-positive number");
    const Rational base = sforge::pow(q, e.get_num().get_si());
    if (e.get_den() == 1) return Real(base);
    const unsigned long root = e.get_den().get_ui();
    // Exact when numerator and denominator are perfect powers.
    BigInt rn, rd;
    if (mpz_root(rn.get_mpz_t(), base.get_num_mpz_t(), root) != 0 &&
        mpz_root(rd.get_mpz_t(), base.get_den_mpz_t(), root) != 0)
        return Real(ratio(rn, rd));
    Real r;
    r.exact_.reset();
    mpfr_t x;
    mpfr_init2(x, kRealPrecision);
    set_q(x, base, MPFR_RNDD);
    mpfr_rootn_ui(r.lo_, x, root, MPFR_RNDD);
    set_q(x, base, MPFR_RNDU);
    mpfr_rootn_ui(r.hi_, x, root, MPFR_RNDU);
    mpfr_clear(x);
    return r;
}

double Real::approx() const {
    if (exact_) return exact_->get_d();
    mpfr_t m;
    mpfr_init2(m, kRealPrecision);
    mpfr_add(m, lo_, hi_, MPFR_RNDN);
    mpfr_div_2ui(m, m, 1, MPFR_RNDN);
    double d = mpfr_get_d(m, MPFR_RNDN);
    mpfr_clear(m);
    return d;
}

double Real::lower() const { return mpfr_get_d(lo_, MPFR_RNDD); }
double Real::upper() const { return mpfr_get_d(hi_, MPFR_RNDU); }

std::string Real::to_string() const {
    if (exact_) return sforge::to_string(*exact_);
    std::ostringstream os;
    os.precision(17);
    os << "~" << approx();
    return os.str();
}

Real operator-(const Real& a) {
    if (a.exact_) return Real(-*a.exact_);
    Real r;
    r.exact_.reset();
    mpfr_neg(r.lo_, a.hi_, MPFR_RNDD);
    mpfr_neg(r.hi_, a.lo_, MPFR_RNDU);
    return r;
}

Real operator+(const Real& a, const Real& b) {
    if (a.exact_ && b.exact_) return Real(*a.exact_ + *b.exact_);
    Real r;
    r.exact_.reset();
    mpfr_add(r.lo_, a.lo_, b.lo_, MPFR_RNDD);
    mpfr_add(r.hi_, a.hi_, b.hi_, MPFR_RNDU);
    return r;
}

Real operator-(const Real& a, const Real& b) { return a + (-b); }

Real operator*(const Real& a, const Real& b) {
    if (a.exact_ && b.exact_) return Real(*a.exact_ * *b.exact_);
    if ((a.exact_ && *a.exact_ == 0) || (b.exact_ && *b.exact_ == 0)) return Real(0L);
    Real r;
    r.exact_.reset();
    mpfr_t c[4];
    for (auto& x : c) mpfr_init2(x, kRealPrecision);
    mpfr_srcptr al[2] = {a.lo_, a.hi_};
    mpfr_srcptr bl[2] = {b.lo_, b.hi_};
    int idx = 0;
    for (auto x : al)
        for (auto y : bl) mpfr_mul(c[idx++], x, y, MPFR_RNDD);
    mpfr_set(r.lo_, c[0], MPFR_RNDD);
    for (int i = 1; i < 4; ++i) mpfr_min(r.lo_, r.lo_, c[i], MPFR_RNDD);
    idx = 0;
    for (auto x : al)
        for (auto y : bl) mpfr_mul(c[idx++], x, y, MPFR_RNDU);
    mpfr_set(r.hi_, c[0], MPFR_RNDU);
    for (int i = 1; i < 4; ++i) mpfr_max(r.hi_, r.hi_, c[i], MPFR_RNDU);
    for (auto& x : c) mpfr_clear(x);
    return r;
}

Real operator/(const Real& a, const Real& b) {
    if (b.exact_ && *b.exact_ == 0) throw std::domain_error("division by zero");
    if (a.exact_ && b.exact_) return Real(*a.exact_ / *b.exact_);
    if (mpfr_sgn(b.lo_) <= 0 && mpfr_sgn(b.hi_) >= 0)
        throw std::domain_error("division by an interval containing zero");
    Real inv;
    inv.exact_.reset();
    mpfr_ui_div(inv.lo_, 1, b.hi_, MPFR_RNDD);
    mpfr_ui_div(inv.hi_, 1, b.lo_, MPFR_RNDU);
    return a * inv;
}

Real Real::pow(long e) const {
    if (exact_) return Real(sforge::pow(*exact_, e));
    if (e == 0) return Real(1L);
    if (e < 0) return Real(1L) / pow(-e);
    Real r(1L);
    Real base = *this;
    long k = e;
    while (k) {
        if (k & 1) r = r * base;
        k >>= 1;
        if (k) base = base * base;
    }
    return r;
}

Real Real::log2() const {
    if (exact_) return Real::log2(*exact_);
    if (mpfr_sgn(lo_) <= 0) throw std::domain_error("log2 of an interval reaching zero");
    Real r;
    r.exact_.reset();
    mpfr_log2(r.lo_, lo_, MPFR_RNDD);
    mpfr_log2(r.hi_, hi_, MPFR_RNDU);
    return r;
}

Real Real::max(const Real& a, const Real& b) {
    auto c = a.compare(b);
    if (c && *c >= 0) return a;
    if (c && *c < 0) return b;
    Real r;
    r.exact_.reset();
    mpfr_max(r.lo_, a.lo_, b.lo_, MPFR_RNDD);
    mpfr_max(r.hi_, a.hi_, b.hi_, MPFR_RNDU);
    return r;
}

std::optional<int> Real::compare(const Rational& q) const {
    if (exact_) return cmp(*exact_, q) < 0 ? -1 : (cmp(*exact_, q) > 0 ? 1 : 0);
    if (mpfr_cmp_q(hi_, q.get_mpq_t()) < 0) return -1;
    if (mpfr_cmp_q(lo_, q.get_mpq_t()) > 0) return 1;
    return std::nullopt;
}

std::optional<int> Real::compare(const Real& other) const {
    if (other.exact_) return compare(*other.exact_);
    if (exact_) {
        auto c = other.compare(*exact_);
        if (!c) return std::nullopt;
        return -*c;
    }
    if (mpfr_cmp(hi_, other.lo_) < 0) return -1;
    if (mpfr_cmp(lo_, other.hi_) > 0) return 1;
    return std::nullopt;
}

std::optional<BigInt> Real::floor() const {
    if (exact_) {
        BigInt f;
        mpz_fdiv_q(f.get_mpz_t(), exact_->get_num_mpz_t(), exact_->get_den_mpz_t());
        return f;
    }
    mpfr_t a, b;
    mpfr_init2(a, kRealPrecision);
    mpfr_init2(b, kRealPrecision);
    mpfr_floor(a, lo_);
    mpfr_floor(b, hi_);
    std::optional<BigInt> out;
    if (mpfr_equal_p(a, b)) {
        BigInt z;
        mpfr_get_z(z.get_mpz_t(), a, MPFR_RNDN);
        // hi landing exactly on an integer while lo is below it is undecided; handled by equality above.
        out = z;
    }
    mpfr_clear(a);
    mpfr_clear(b);
    return out;
}

}  // namespace sforge
