"""Average ranks of the five published algorithms from the published per-instance tables."""
from scipy.stats import rankdata
atd = [[368.1958,445.1122,161.8384,194.0774,154.4438],[705.8818,913.8073,178.1569,671.9904,169.8130],[681.5308,782.6583,245.8020,252.0116,187.2126],[1155.3936,1261.0989,249.7653,226.8773,320.4334],[933.4857,1104.9209,236.5322,236.5244,592.3761],[1618.8890,1839.8178,451.0401,640.4673,401.9143]]
aec = [[541.7004,584.1528,743.8614,622.0636,524.3706],[573.9115,616.5412,724.3359,762.2767,487.8757],[574.1068,623.6895,762.4399,567.4193,580.9955],[679.2424,579.8798,906.7152,737.1444,549.9695],[626.0573,636.4504,851.3875,776.7553,710.1657],[677.1887,674.9763,852.3247,917.8795,818.8782]]
atn = [[443.3333,494.6000,623.4000,647.9333,679.6000],[826.2667,882.7333,1224.2000,1158.6667,1306.6667],[785.1333,812.2667,1107.3333,1152.7333,1320.3333],[1476.8000,1650.3333,1914.0000,1919.6667,2059.7333],[1071.7333,1227.2667,1717.6667,1760.2667,1967.7333],[2230.6000,2313.2667,3205.7333,3589.2667,3767.9333]]
acoi = [[0.3762,32.4460,88.4897,123.2103,170.9732],[88.1119,51.8222,358.2882,359.2345,466.6511],[74.9282,5.7390,316.0606,357.1098,435.7963],[253.9011,210.2697,633.6083,704.2282,747.0715],[186.4932,169.4821,585.0505,632.3760,726.9881],[569.7772,482.152,1171.9050,1344.7181,1447.5302]]
for name, t, larger in [("ATD", atd, False), ("AEC", aec, False), ("ATN", atn, True), ("ACOI", acoi, True)]:
    ranks = [rankdata([-x if larger else x for x in row]) for row in t]
    avg = [sum(r[j] for r in ranks) / len(ranks) for j in range(5)]
    print(name, ["%.4f" % a for a in avg])
