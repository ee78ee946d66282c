"""Reference values for the D'Agostino-Pearson omnibus test used in the C++ tests."""
from scipy import stats

samples = {
    "mixed": [((i * 7919) % 101) / 101.0 - 0.5 + ((i * i) % 13) / 26.0 for i in range(50)],
    "squares": [float(i * i) for i in range(40)],
}

for name, x in samples.items():
    k2 = stats.normaltest(x)
    print(name, repr(stats.skewtest(x).statistic), repr(stats.kurtosistest(x).statistic),
          repr(k2.statistic), repr(k2.pvalue))
