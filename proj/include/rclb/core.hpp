#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace rclb {

inline constexpr const char* kVersion = "0.3.0";

/// Invalid input to an operation (violated precondition, bad config key, ...).
struct invalid_argument_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Problem size exceeds the enumeration / exactness budget of an engine.
struct budget_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Malformed config / fixture / artifact file.
struct parse_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Compensated (Kahan) accumulator. All exact sums go through this.
class KahanSum {
  public:
    void add(double x) {
        double y = x - comp_;
        double t = sum_ + y;
        comp_ = (t - sum_) - y;
        sum_ = t;
    }
    double value() const { return sum_; }
    void reset() {
        sum_ = 0.0;
        comp_ = 0.0;
    }
    KahanSum& operator+=(double x) {
        add(x);
        return *this;
    }
    // Merging keeps compensation terms; merge order must be fixed by the caller.
    void merge(const KahanSum& other) {
        add(other.sum_);
        add(other.comp_);
    }

  private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

inline double sq(double x) { return x * x; }

/// Runs fn(index, acc) for each work item, possibly across threads, then
/// merges the per-item accumulators in index order. Results therefore do not
/// depend on the number of workers.
template <class Acc, class Fn>
Acc run_strata(int nstrata, int threads, Fn&& fn) {
    std::vector<Acc> accs(nstrata);
    if (threads <= 1) {
        for (int s = 0; s < nstrata; ++s) fn(s, accs[s]);
    } else {
        std::vector<std::thread> pool;
        std::atomic<int> next{0};
        for (int t = 0; t < threads; ++t) {
            pool.emplace_back([&] {
                for (;;) {
                    int s = next.fetch_add(1);
                    if (s >= nstrata) return;
                    fn(s, accs[s]);
                }
            });
        }
        for (auto& th : pool) th.join();
    }
    Acc out;
    for (int s = 0; s < nstrata; ++s) out.merge(accs[s]);
    return out;
}

/// Shortest-round-trip-ish formatting used for all persisted numbers, so that
/// identical runs serialize byte-identically.
inline std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

inline std::string format_double(double x, int precision) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.*g", precision, x);
    return buf;
}

// Little-endian scalar encode/decode for the checkpoint format.
inline void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xff));
}
inline void put_u64(std::vector<unsigned char>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xff));
}
inline void put_f64(std::vector<unsigned char>& out, double x) {
    std::uint64_t v;
    static_assert(sizeof(v) == sizeof(x));
    __builtin_memcpy(&v, &x, 8);
    put_u64(out, v);
}

class ByteReader {
  public:
    ByteReader(const unsigned char* data, std::size_t size) : data_(data), size_(size) {}
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= std::uint32_t(data_[pos_ + i]) << (8 * i);
        pos_ += 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= std::uint64_t(data_[pos_ + i]) << (8 * i);
        pos_ += 8;
        return v;
    }
    double f64() {
        std::uint64_t v = u64();
        double x;
        __builtin_memcpy(&x, &v, 8);
        return x;
    }
    void raw(unsigned char* dst, std::size_t n) {
        need(n);
        __builtin_memcpy(dst, data_ + pos_, n);
        pos_ += n;
    }
    std::size_t remaining() const { return size_ - pos_; }

  private:
    void need(std::size_t n) const {
        if (pos_ + n > size_) throw parse_error("truncated binary record");
    }
    const unsigned char* data_;
    std::size_t size_;
    std::size_t pos_ = 0;
};

}  // namespace rclb
