import time, sys
sys.path.insert(0, "/root/pkg/src")
from collections import Counter
from tbnet.parser import parse_net
from tbnet.graph import BuildConfig, build_graph

net = parse_net(open("/root/pkg/tests/fixtures/gasburner_05.tb").read())
t0 = time.time()
g = build_graph(net, BuildConfig(ta_enabled=True, max_states=6000))
print(f"{len(g.nodes)} nodes capped={g.capped} {time.time()-t0:.1f}s")
census = Counter(tuple(sorted(p for p, _ in n.state.marking)) for n in g.nodes)
for marking, count in census.most_common(12):
    print(count, " ".join(marking))
# sample states of the biggest family
biggest = census.most_common(1)[0][0]
shown = 0
for n in g.nodes:
    if tuple(sorted(p for p, _ in n.state.marking)) == biggest:
        print("  ", n.state.pretty()[:240])
        shown += 1
        if shown >= 6:
            break
