#pragma once

namespace ergodec {

// Kahan compensated accumulator. Long Birkhoff sums (n up to 1e8) would lose
// several digits with a plain double sum.
struct KahanSum {
    double sum = 0.0;
    double compensation = 0.0;

    void add(double value) {
        double y = value - compensation;
        double t = sum + y;
        compensation = (t - sum) - y;
        sum = t;
    }

    double value() const { return sum + compensation; }
};

} // namespace ergodec
