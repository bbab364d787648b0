#pragma once

#include <gmpxx.h>
#include <mpfr.h>

#include <optional>
#include <string>
#include <string_view>

namespace sforge {

using BigInt = mpz_class;
using Rational = mpq_class;

Rational parse_rational(std::string_view text);
std::string to_string(const Rational& q);
std::string to_string(const BigInt& z);

// q^e for any integer e; q must be nonzero when e < 0.
Rational pow(const Rational& q, long e);
BigInt pow(const BigInt& z, unsigned long e);

// num/den in lowest terms; den must be nonzero.
Rational ratio(const BigInt& num, const BigInt& den);

BigInt binomial(long n, long k);
BigInt factorial(long n);

// Exact log2 when q is an integral power of two (possibly negative exponent).
std::optional<long> exact_log2(const Rational& q);

// Certified enclosure [lo, hi] of a real number. Values built only from
// rationals with + - * / and integer powers stay exact.
class Real {
public:
    Real();
    Real(const Rational& q);  // NOLINT: implicit on purpose
    Real(long v);             // NOLINT
    Real(const Real& other);
    Real(Real&& other) noexcept;
    Real& operator=(const Real& other);
    Real& operator=(Real&& other) noexcept;
    ~Real();

    static Real log2(const Rational& q);
    static Real ln(const Rational& q);
    // q^(num/den) for q > 0.
    static Real rpow(const Rational& q, const Rational& e);

    bool is_exact() const { return exact_.has_value(); }
    const Rational& exact() const { return *exact_; }
    double approx() const;
    double lower() const;
    double upper() const;
    std::string to_string() const;

    Real pow(long e) const;
    Real log2() const;
    friend Real operator+(const Real& a, const Real& b);
    friend Real operator-(const Real& a, const Real& b);
    friend Real operator*(const Real& a, const Real& b);
    friend Real operator/(const Real& a, const Real& b);
    friend Real operator-(const Real& a);

    static Real max(const Real& a, const Real& b);

    // Three-valued comparison against a rational.
    // -1: certainly below, 0: exactly equal, +1: certainly above, nullopt: undecided.
    std::optional<int> compare(const Rational& q) const;
    std::optional<int> compare(const Real& other) const;
    // Certified floor, if decidable.
    std::optional<BigInt> floor() const;

private:
    mpfr_t lo_, hi_;
    std::optional<Rational> exact_;
    void set_exact(const Rational& q);
};

constexpr mpfr_prec_t kRealPrecision = 512;

}  // namespace sforge
