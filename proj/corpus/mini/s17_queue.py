while queue:
    node = queue.pop(0)
    if node in visited:
        continue
    visited.add(node)
    queue.extend(graph[node])
print(len(visited))
