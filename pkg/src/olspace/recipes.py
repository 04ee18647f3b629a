"""Shipped demo invocations of `olspace witness`; each one must pass `olspace verify`."""

DOMINATING_F = '{"pieces":[{"value":2.0,"intervals":[[0.0,1.0]]},{"value":0.5,"intervals":[[1.0,3.0]]}]}'

RECIPES = {
    "spaceable-inf": ["spaceable-inf", "--phi", "power:2", "--phis", "power:4", "--phis", "power:3",
                      "--w", "const:1", "--N", "4", "--K", "40"],
    "spaceable-zero": ["spaceable-zero", "--phi", "power:2", "--phis", "power:1", "--w", "const:1",
                       "--N", "4", "--K", "40"],
    "spaceable-mixed": ["spaceable-mixed", "--phi", "power:2", "--phis", "power:4@inf", "--phis", "power:1@zero",
                        "--w", "const:1", "--N", "4", "--K", "40"],
    "non-oc": ["non-oc", "--phi", "expr:u^2*exp(u^2)", "--w", "const:1", "--K", "40"],
    "non-oc-expm1": ["non-oc", "--phi", "expm1", "--w", "const:1", "--K", "30"],
    "non-inclusion": ["non-inclusion", "--phi1", "expm1", "--phi2", "power:2", "--w", "const:1",
                      "--gamma", "1", "--N", "20"],
    "dominating-weight": ["dominating-weight", "--phi", "power:2", "--w", "power:0.5", "--f", DOMINATING_F],
    "lorentz-strict-right": ["lorentz-strict", "--p", "2", "--side", "right", "--w", "const:1"],
    "lorentz-strict-left": ["lorentz-strict", "--p", "2", "--side", "left", "--w", "const:1"],
    "lorentz-strict-both": ["lorentz-strict", "--p", "2", "--side", "both", "--w", "const:1"],
}
