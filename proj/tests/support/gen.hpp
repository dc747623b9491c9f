#pragma once
// Small seeded generators shared by the property tests.

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace gen {

class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    // Uniform integer in [lo, hi].
    std::int64_t integer(std::int64_t lo, std::int64_t hi)
    {
        return lo + static_cast<std::int64_t>(eng_() % static_cast<std::uint64_t>(hi - lo + 1));
    }
    // Uniform real in [lo, hi).
    double real(double lo, double hi) { return lo + (hi - lo) * (static_cast<double>(eng_() >> 11) * 0x1.0p-53); }
    double normal()
    {
        const double u1 = real(1e-300, 1.0);
        const double u2 = real(0.0, 1.0);
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }
    bool coin() { return (eng_() >> 63) != 0; }

    std::string bytes(std::size_t n)
    {
        std::string s(n, '\0');
        for (auto& c : s)
            c = static_cast<char>(eng_() & 0xff);
        return s;
    }

    std::mt19937_64& engine() { return eng_; }

private:
    std::mt19937_64 eng_;
};

// Random orthogonal matrix (Gram-Schmidt on Gaussian columns), row-major.
inline std::vector<std::vector<double>> orthogonal(Rng& r, std::size_t d)
{
    std::vector<std::vector<double>> q;
    while (q.size() < d) {
        std::vector<double> v(d);
        for (auto& x : v)
            x = r.normal();
        for (const auto& u : q) {
            double p = 0;
            for (std::size_t i = 0; i < d; ++i)
                p += v[i] * u[i];
            for (std::size_t i = 0; i < d; ++i)
                v[i] -= p * u[i];
        }
        double n = 0;
        for (double x : v)
            n += x * x;
        n = std::sqrt(n);
        if (n < 1e-6)
            continue;
        for (auto& x : v)
            x /= n;
        q.push_back(v);
    }
    return q;
}

} // namespace gen
