#include "cde/models/queue.hpp"

#include "cde/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cde {

namespace {

double service_pdf(const QueueParams& p, double y) {
  if (!(y > 0.0)) return 0.0;
  const double sg = p.sigma();
  return normal_pdf((std::log(y) - p.mu) / sg) / (y * sg);
}

double service_cdf(const QueueParams& p, double y) {
  if (!(y > 0.0)) return 0.0;
  return normal_cdf((std::log(y) - p.mu) / p.sigma());
}

void check(const QueueParams& p) {
  if (!(p.lambda > 0.0)) throw std::invalid_argument("queue: lambda must be positive");
  if (!(p.sigma2 > 0.0)) throw std::invalid_argument("queue: sigma2 must be positive");
  if (!p.regenerative && !(p.tau > 0.0)) throw std::invalid_argument("queue: tau must be positive");
}

}  // namespace

double QueueParams::sigma() const { return std::sqrt(sigma2); }

QueueTrajectory queue_simulate(const QueueParams& p, PointCursor& u) {
  const double sg = p.sigma();
  auto interarrival = [&] { return -std::log1p(-open_unit(u.next())) / p.lambda; };
  auto service = [&] { return std::exp(p.mu + sg * normal_inv(u.next())); };

  QueueTrajectory t;
  t.a.push_back(0.0);
  t.s.push_back(0.0);
  t.w.push_back(0.0);
  if (p.regenerative) {
    t.a.push_back(0.0);
    t.s.push_back(service());
    t.w.push_back(0.0);
    t.n = 1;
    for (;;) {
      const double a = interarrival();
      const double w = std::max(0.0, t.w.back() + t.s.back() - a);
      t.a.push_back(a);
      t.w.push_back(w);
      if (w == 0.0) break;  // customer n+1 finds the system empty
      t.s.push_back(service());
      ++t.n;
    }
    return t;
  }
  double clock = interarrival();
  if (clock >= p.tau) return t;
  t.a.push_back(clock);
  t.s.push_back(service());
  t.w.push_back(0.0);
  t.n = 1;
  for (;;) {
    const double a = interarrival();
    clock += a;
    if (clock >= p.tau) break;
    t.a.push_back(a);
    t.w.push_back(std::max(0.0, t.w.back() + t.s.back() - a));
    t.s.push_back(service());
    ++t.n;
  }
  return t;
}

std::size_t queue_last_term(const QueueParams& p, const QueueTrajectory& t) {
  return p.regenerative ? t.n + 1 : t.n;
}

double queue_cde(const QueueParams& p, const QueueTrajectory& t, double x) {
  if (!(x > 0.0)) return 0.0;
  const std::size_t last = queue_last_term(p, t);
  double d = 0.0;
  for (std::size_t j = 2; j <= last; ++j) d += service_pdf(p, x + t.a[j] - t.w[j - 1]);
  return d;
}

double queue_cdf(const QueueParams& p, const QueueTrajectory& t, double x) {
  if (t.n == 0 || x < 0.0) return 0.0;
  const std::size_t last = queue_last_term(p, t);
  double c = 1.0;  // customer 1 always waits 0
  for (std::size_t j = 2; j <= last; ++j) {
    const double shift = t.a[j] - t.w[j - 1];
    c += service_cdf(p, x + shift);
    // In a cycle, customer j <= N+1 counts only when it waits; the zero-wait
    // mass of a cycle is its first customer.
    if (p.regenerative) c -= service_cdf(p, shift);
  }
  return c;
}

GlrSample queue_glr(const QueueParams& p, const QueueTrajectory& t) {
  const double sg = p.sigma();
  GlrSample g;
  g.weight = static_cast<double>(t.n);
  const std::size_t last = queue_last_term(p, t);
  for (std::size_t j = 2; j <= last; ++j) {
    const double s = t.s[j - 1];
    const double z = (std::log(s) - p.mu) / sg;
    g.terms.push_back({t.w[j], -(z + sg) / (s * sg)});
  }
  return g;
}

QueueModel::QueueModel(QueueParams p) : p_(p) {
  check(p_);
  spec_.name = "queue";
  spec_.a = 0.0;
  spec_.b = 2.2;
  spec_.variants = {"cde"};
  spec_.glr_variants = {"glr"};
  if (p_.regenerative) {
    spec_.expected_weight.reset();
  } else {
    spec_.expected_weight = p_.lambda * p_.tau;
  }
}

std::unique_ptr<Model> QueueModel::from_json(const nlohmann::json& j) {
  QueueParams p;
  p.lambda = j.value("lambda", p.lambda);
  p.mu = j.value("mu", p.mu);
  p.sigma2 = j.value("sigma2", p.sigma2);
  p.tau = j.value("tau", p.tau);
  if (j.contains("mode")) {
    const auto mode = j.at("mode").get<std::string>();
    if (mode == "regenerative") {
      p.regenerative = true;
    } else if (mode != "finite") {
      throw std::invalid_argument("queue: mode must be 'finite' or 'regenerative', got '" + mode + "'");
    }
  }
  return std::make_unique<QueueModel>(p);
}

ConditionalDensity QueueModel::conditional(std::size_t, PointCursor& u) const {
  const QueueParams p = p_;
  auto t = std::make_shared<const QueueTrajectory>(queue_simulate(p_, u));
  auto grid = [p, t](std::span<const double> xs, std::span<double> out) {
    const std::size_t last = queue_last_term(p, *t);
    for (std::size_t j = 2; j <= last; ++j) {
      const double shift = t->a[j] - t->w[j - 1];
      for (std::size_t k = 0; k < xs.size(); ++k) {
        if (xs[k] > 0.0) out[k] += service_pdf(p, xs[k] + shift);
      }
    }
  };
  return ConditionalDensity([p, t](double x) { return queue_cde(p, *t, x); },
                            [p, t](double x) { return queue_cdf(p, *t, x); },
                            static_cast<double>(t->n), grid);
}

GlrSample QueueModel::glr(std::size_t, PointCursor& u) const {
  return queue_glr(p_, queue_simulate(p_, u));
}

nlohmann::json QueueModel::describe() const {
  nlohmann::json j{{"lambda", p_.lambda}, {"mu", p_.mu}, {"sigma2", p_.sigma2},
                   {"mode", p_.regenerative ? "regenerative" : "finite"}};
  if (!p_.regenerative) j["tau"] = p_.tau;
  return j;
}

}  // namespace cde
